"""Dense kernels with a fixed reduction order.

Every sum in this module is accumulated strictly left to right in
increasing index, one multiply and one add per term, with no pairwise
splitting, no compensation and no fused multiply-add. Two computation
paths built from these kernels therefore round identically whenever they
reduce the same terms in the same order. The kernels are compiled with
numba in strict IEEE mode (``fastmath=False``) so LLVM may not reassociate.

Vectors and matrices are plain ``float64`` numpy arrays.
"""
import math

import numpy as np
from numba import njit

from .errors import EmptyInput, NonFiniteInput, ShapeError

_jit = njit(cache=True, nogil=True, fastmath=False)


@_jit
def dot_kernel(a, b):
    acc = 0.0
    for j in range(a.shape[0]):
        acc += a[j] * b[j]
    return acc


@_jit
def matvec_kernel(m, v, out):
    for i in range(m.shape[0]):
        acc = 0.0
        for j in range(m.shape[1]):
            acc += m[i, j] * v[j]
        out[i] = acc


@_jit
def vecmat_kernel(v, m, out):
    # out = m^T v, i.e. out[c] = sum_j v[j] * m[j, c]
    for c in range(m.shape[1]):
        acc = 0.0
        for j in range(m.shape[0]):
            acc += v[j] * m[j, c]
        out[c] = acc


@_jit
def matmul_kernel(a, b, out):
    for i in range(a.shape[0]):
        for c in range(b.shape[1]):
            acc = 0.0
            for j in range(a.shape[1]):
                acc += a[i, j] * b[j, c]
            out[i, c] = acc


@_jit
def softmax_kernel(scores, n, out):
    """Shifted softmax over ``scores[:n]`` written to ``out[:n]``."""
    m = scores[0]
    for j in range(1, n):
        if scores[j] > m:
            m = scores[j]
    total = 0.0
    for j in range(n):
        e = math.exp(scores[j] - m)
        out[j] = e
        total += e
    for j in range(n):
        out[j] = out[j] / total


def as_vector(x, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def as_matrix(x, name="matrix"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def softmax_stable(scores):
    """Max-shifted softmax of a finite, non-empty score vector.

    >>> softmax_stable([0.0, math.log(3.0)])
    array([0.25, 0.75])
    """
    s = as_vector(scores, "scores")
    if s.shape[0] == 0:
        raise EmptyInput("softmax of an empty vector")
    if not np.all(np.isfinite(s)):
        raise NonFiniteInput("softmax input contains NaN or Inf")
    out = np.empty_like(s)
    softmax_kernel(s, s.shape[0], out)
    return out


def dot(a, b):
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"dot of lengths {a.shape[0]} and {b.shape[0]}")
    return dot_kernel(a, b)


def matvec(m, v):
    m = as_matrix(m, "m")
    v = as_vector(v, "v")
    if m.shape[1] != v.shape[0]:
        raise ShapeError(f"matvec {m.shape} x ({v.shape[0]},)")
    out = np.empty(m.shape[0])
    matvec_kernel(m, v, out)
    return out


def vecmat(v, m):
    """``m.T @ v`` with the shared index reduced left to right."""
    v = as_vector(v, "v")
    m = as_matrix(m, "m")
    if m.shape[0] != v.shape[0]:
        raise ShapeError(f"vecmat ({v.shape[0]},) x {m.shape}")
    out = np.empty(m.shape[1])
    vecmat_kernel(v, m, out)
    return out


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul {a.shape} x {b.shape}")
    out = np.empty((a.shape[0], b.shape[1]))
    matmul_kernel(a, b, out)
    return out
