"""
Checking the backward pass against finite differences
=====================================================
"""

import numpy as np

from sdnc import EquivConfig, attention_backward, finite_diff_check
from sdnc.equivalence import make_self_instance
from sdnc.grad import make_upstream

cfg = EquivConfig(T=6, d_model=4, heads=2, seed=42)
params, X = make_self_instance(cfg)
upstream = make_upstream(cfg)
grads = attention_backward(X, params, upstream)

print("dX:\n", np.round(grads.dX, 4))

# gradient flowing back from output row t never reaches inputs after t
upstream_prefix = upstream.copy()
upstream_prefix[3:] = 0.0
print("dX rows 3.. with upstream on rows 0..2 only:\n",
      attention_backward(X, params, upstream_prefix).dX[3:])

for eps in (1e-4, 1e-6, 1e-8):
    report = finite_diff_check(cfg, eps=eps)
    print(f"eps={eps:g}: max relative error {report.max_rel_err:.2e} at {report.worst_parameter}")
