"""
Per-token cost of a growing memory
==================================

Each streamed token reads every row written so far, so total read work over
a stream of T tokens grows like T**2.
"""

import math

import numpy as np

from sdnc import init_params
from sdnc.cli import read_cost_exponent, streamed_read_seconds

rng = np.random.default_rng(0)
params = init_params(64, 16, 16, 4, rng)
X = rng.uniform(-1, 1, (2048, 64))
K, V, Q = X @ params.W_K[0], X @ params.W_V[0], X @ params.W_Q[0]
scale = 1 / math.sqrt(16)

streamed_read_seconds(K[:8], V[:8], Q[:8], scale)  # compile

sizes = [256, 512, 1024, 2048]
costs = [min(streamed_read_seconds(K[:n], V[:n], Q[:n], scale) for _ in range(3)) for n in sizes]
for n, c in zip(sizes, costs):
    print(f"T={n:5d}  total read time {1e3 * c:8.2f} ms")
print("fitted exponent:", round(read_cost_exponent(sizes, costs), 2))
