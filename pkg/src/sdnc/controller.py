"""The stateless feedforward controller.

Each input row is mapped independently to a query, a key and a value per
head. Nothing is carried between calls.
"""
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, matmul, vecmat
from .errors import ShapeError


@dataclass(frozen=True)
class LayerParams:
    """Projection weights of one attention layer.

    ``W_Q[h]`` is ``d_model x d_k``, ``W_K[h]`` is ``d_source x d_k``,
    ``W_V[h]`` is ``d_source x d_v`` and ``W_O`` is ``(heads * d_v) x d_model``.
    ``d_source`` is the width of the rows keys and values are projected
    from: ``d_model`` for self-attention, the encoder width for
    cross-attention.
    """

    W_Q: np.ndarray
    W_K: np.ndarray
    W_V: np.ndarray
    W_O: np.ndarray

    def __post_init__(self):
        for name in ("W_Q", "W_K", "W_V", "W_O"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.W_Q.ndim != 3 or self.W_K.ndim != 3 or self.W_V.ndim != 3:
            raise ShapeError("W_Q, W_K and W_V must be stacked per head (3-D)")
        if self.W_O.ndim != 2:
            raise ShapeError("W_O must be 2-D")
        H, d_model, d_k = self.W_Q.shape
        if min(H, d_model, d_k) < 1:
            raise ShapeError("all dimensions must be >= 1")
        if self.W_K.shape[0] != H or self.W_K.shape[2] != d_k:
            raise ShapeError(f"W_K shape {self.W_K.shape} inconsistent with W_Q {self.W_Q.shape}")
        if self.W_V.shape[0] != H or self.W_V.shape[1] != self.W_K.shape[1]:
            raise ShapeError(f"W_V shape {self.W_V.shape} inconsistent with W_K {self.W_K.shape}")
        if min(self.W_K.shape[1], self.W_V.shape[2]) < 1:
            raise ShapeError("all dimensions must be >= 1")
        if self.W_O.shape != (H * self.W_V.shape[2], d_model):
            raise ShapeError(
                f"W_O must be {(H * self.W_V.shape[2], d_model)}, got {self.W_O.shape}"
            )

    @property
    def heads(self):
        return self.W_Q.shape[0]

    @property
    def d_model(self):
        return self.W_Q.shape[1]

    @property
    def d_k(self):
        return self.W_Q.shape[2]

    @property
    def d_v(self):
        return self.W_V.shape[2]

    @property
    def d_source(self):
        return self.W_K.shape[1]

    def replace(self, **arrays):
        fields = dict(W_Q=self.W_Q, W_K=self.W_K, W_V=self.W_V, W_O=self.W_O)
        fields.update(arrays)
        return LayerParams(**fields)

    def equals(self, other):
        """Bit-exact equality of every weight."""
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )

    def arrays(self):
        return self.W_Q, self.W_K, self.W_V, self.W_O


def init_params(d_model, d_k, d_v, heads, rng, d_source=None):
    """Draw weights uniform on [-1/sqrt(d_model), 1/sqrt(d_model)].

    ``rng`` is a ``numpy.random.Generator`` or an integer seed. Arrays are
    drawn in the order W_Q, W_K, W_V, W_O so a seed fixes every weight.
    """
    if min(d_model, d_k, d_v, heads) < 1:
        raise ShapeError("all dimensions must be >= 1")
    rng = np.random.default_rng(rng)
    d_source = d_model if d_source is None else d_source
    bound = 1.0 / np.sqrt(d_model)
    W_Q = rng.uniform(-bound, bound, (heads, d_model, d_k))
    W_K = rng.uniform(-bound, bound, (heads, d_source, d_k))
    W_V = rng.uniform(-bound, bound, (heads, d_source, d_v))
    W_O = rng.uniform(-bound, bound, (heads * d_v, d_model))
    return LayerParams(W_Q, W_K, W_V, W_O)


@dataclass(frozen=True)
class ProjectedToken:
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    head: int
    position: int = 0


def _check_head(params, head):
    if not 0 <= head < params.heads:
        raise IndexError(f"head {head} out of range for {params.heads} heads")


def project(x, params, head, position=0):
    """Project one input row for one head: ``q = W_Q^T x``, ``k = W_K^T x``, ``v = W_V^T x``.

    Only valid for self-attention parameters (``d_source == d_model``).
    """
    x = as_vector(x, "x")
    _check_head(params, head)
    if x.shape[0] != params.d_model or params.d_source != params.d_model:
        raise ShapeError(f"x has length {x.shape[0]}, expected d_model={params.d_model}")
    return ProjectedToken(
        q=vecmat(x, params.W_Q[head]),
        k=vecmat(x, params.W_K[head]),
        v=vecmat(x, params.W_V[head]),
        head=head,
        position=position,
    )


def project_query(x, params, head):
    x = as_vector(x, "x")
    _check_head(params, head)
    if x.shape[0] != params.d_model:
        raise ShapeError(f"x has length {x.shape[0]}, expected d_model={params.d_model}")
    return vecmat(x, params.W_Q[head])


def project_key_value(s, params, head):
    """Key and value of a source row (encoder state or self-attention input)."""
    s = as_vector(s, "source row")
    _check_head(params, head)
    if s.shape[0] != params.d_source:
        raise ShapeError(f"source row has length {s.shape[0]}, expected {params.d_source}")
    return vecmat(s, params.W_K[head]), vecmat(s, params.W_V[head])


def project_sequence(X, params, head):
    """Row-wise projection of a ``T x d_model`` sequence; returns ``(Q, K, V)``.

    Row ``t`` of each result is bit-identical to ``project(X[t], ...)``.
    """
    X = as_matrix(X, "X")
    _check_head(params, head)
    if X.shape[0] < 1 or X.shape[1] != params.d_model or params.d_source != params.d_model:
        raise ShapeError(f"X has shape {X.shape}, expected (T, {params.d_model})")
    return (
        matmul(X, params.W_Q[head]),
        matmul(X, params.W_K[head]),
        matmul(X, params.W_V[head]),
    )
