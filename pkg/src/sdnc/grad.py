"""Hand-written reverse pass for causal multi-head self-attention.

The scalar being differentiated is ``L = sum(upstream * Z)`` with ``Z`` the
batched layer output. Central finite differences give an independent
check.
"""
import math
from dataclasses import dataclass

import numpy as np

from .attention import causal_self_attention, default_scale
from .controller import LayerParams
from .equivalence import make_self_instance
from .errors import ShapeError
from .linalg import as_matrix

PARAM_NAMES = ("X", "W_Q", "W_K", "W_V", "W_O")


@dataclass(frozen=True)
class GradientBundle:
    dX: np.ndarray
    dW_Q: np.ndarray
    dW_K: np.ndarray
    dW_V: np.ndarray
    dW_O: np.ndarray

    def get(self, name):
        return getattr(self, "d" + name)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    worst_parameter: str
    eps: float
    threshold: float
    n_checked: int
    passed: bool


def attention_backward(X, params: LayerParams, upstream):
    """Gradients of ``sum(upstream * Z)`` w.r.t. X and every weight."""
    X = as_matrix(X, "X")
    upstream = as_matrix(upstream, "upstream")
    if upstream.shape != (X.shape[0], params.d_model):
        raise ShapeError(f"upstream has shape {upstream.shape}, expected {(X.shape[0], params.d_model)}")
    out = causal_self_attention(X, params)
    scale = default_scale(params.d_k)
    d_v = params.d_v

    C = np.concatenate(out.head_outputs, axis=1)
    dW_O = C.T @ upstream
    dC = upstream @ params.W_O.T

    dX = np.zeros_like(X)
    dW_Q = np.zeros_like(params.W_Q)
    dW_K = np.zeros_like(params.W_K)
    dW_V = np.zeros_like(params.W_V)
    for h in range(params.heads):
        A = out.per_head_weights[h]  # masked entries are exactly 0
        Q = X @ params.W_Q[h]
        K = X @ params.W_K[h]
        V = X @ params.W_V[h]
        dO = dC[:, h * d_v:(h + 1) * d_v]
        dA = dO @ V.T
        dV = A.T @ dO
        # softmax vector-Jacobian product, row by row
        dS = A * (dA - np.sum(A * dA, axis=1, keepdims=True))
        dQ = scale * (dS @ K)
        dK = scale * (dS.T @ Q)
        dW_Q[h] = X.T @ dQ
        dW_K[h] = X.T @ dK
        dW_V[h] = X.T @ dV
        dX += dQ @ params.W_Q[h].T + dK @ params.W_K[h].T + dV @ params.W_V[h].T
    return GradientBundle(dX, dW_Q, dW_K, dW_V, dW_O)


def loss(X, params, upstream):
    Z = causal_self_attention(X, params).Z
    return math.fsum((upstream * Z).ravel())


def _entries(name, shape):
    for idx in np.ndindex(*shape):
        yield name, idx


def _label(name, idx):
    if name in ("W_Q", "W_K", "W_V"):
        return f"{name}[{idx[0]}][{idx[1]},{idx[2]}]"
    return f"{name}[{','.join(map(str, idx))}]"


def make_upstream(cfg, rng=None):
    """Seeded upstream gradient drawn after the instance (uniform on [-1, 1])."""
    rng = np.random.default_rng([cfg.seed, 1]) if rng is None else rng
    return rng.uniform(-1.0, 1.0, (cfg.T, cfg.d_model))


def finite_diff_check(cfg, eps=1e-6, threshold=1e-5, samples=None, upstream=None):
    """Compare :func:`attention_backward` with central differences.

    Every scalar in X, W_Q, W_K, W_V and W_O is probed unless ``samples``
    is given and smaller than the total, in which case a seeded subset of
    that many entries is used. Relative error uses the denominator
    ``max(|analytic|, |numeric|, 1e-8)``.
    """
    if not 1e-8 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-8, 1e-3], got {eps}")
    if samples is not None and samples < 200:
        raise ValueError("samples must be >= 200 when subsampling")
    params, X = make_self_instance(cfg)
    upstream = make_upstream(cfg) if upstream is None else as_matrix(upstream, "upstream")
    grads = attention_backward(X, params, upstream)

    primals = dict(X=X, W_Q=params.W_Q, W_K=params.W_K, W_V=params.W_V, W_O=params.W_O)
    probes = [p for name in PARAM_NAMES for p in _entries(name, primals[name].shape)]
    if samples is not None and samples < len(probes):
        pick = np.random.default_rng([cfg.seed, 2]).choice(len(probes), samples, replace=False)
        probes = [probes[i] for i in sorted(pick)]

    worst, worst_label = 0.0, ""
    for name, idx in probes:
        numeric = _central_difference(primals, name, idx, eps, upstream)
        analytic = float(grads.get(name)[idx])
        denom = max(abs(analytic), abs(numeric), 1e-8)
        err = abs(analytic - numeric) / denom
        if err > worst or not worst_label:
            worst, worst_label = err, _label(name, idx)
    return GradCheckReport(
        max_rel_err=worst,
        worst_parameter=worst_label,
        eps=eps,
        threshold=threshold,
        n_checked=len(probes),
        passed=bool(worst <= threshold),
    )


def _central_difference(primals, name, idx, eps, upstream):
    values = []
    for sign in (1.0, -1.0):
        arrays = {k: v.copy() for k, v in primals.items()}
        arrays[name][idx] += sign * eps
        X = arrays.pop("X")
        values.append(loss(X, LayerParams(**arrays), upstream))
    return (values[0] - values[1]) / (2.0 * eps)
