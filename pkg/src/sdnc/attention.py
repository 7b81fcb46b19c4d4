"""Batched multi-head attention over whole sequences.

Causal masking restricts each row's softmax and value sum to the prefix
``j <= t`` instead of adding ``-inf`` to masked logits, so a row here
performs the same operation sequence as a streamed memory read.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .controller import LayerParams
from .errors import EmptyMemory, ShapeError
from .linalg import as_matrix, matmul
from .memory import content_read_kernel


def default_scale(d_k):
    return 1.0 / math.sqrt(d_k)


@dataclass(frozen=True)
class AttentionOutput:
    """Layer output ``Z`` plus per-head attention weights and pre-mix head outputs.

    ``per_head_weights[h][t, j]`` is exactly 0 for inadmissible ``j``.
    """

    Z: np.ndarray
    per_head_weights: tuple
    head_outputs: tuple


@njit(cache=True, nogil=True, fastmath=False)
def _attend_kernel(Q, K, V, scale, causal, weights, out):
    S = K.shape[0]
    logits = np.empty(S)
    for t in range(Q.shape[0]):
        n = min(t + 1, S) if causal else S
        content_read_kernel(K, V, n, Q[t], scale, logits, weights[t], out[t])


def attend(Q, K, V, scale, causal=True):
    """Scaled dot-product attention for one head; returns ``(weights, output)``."""
    Q, K, V = as_matrix(Q, "Q"), as_matrix(K, "K"), as_matrix(V, "V")
    if K.shape[0] == 0:
        raise EmptyMemory("attention over zero source rows")
    if Q.shape[1] != K.shape[1] or K.shape[0] != V.shape[0]:
        raise ShapeError(f"Q {Q.shape}, K {K.shape}, V {V.shape} do not conform")
    weights = np.zeros((Q.shape[0], K.shape[0]))
    out = np.empty((Q.shape[0], V.shape[1]))
    _attend_kernel(Q, K, V, float(scale), causal, weights, out)
    return weights, out


def concat_heads_and_mix(head_outputs, W_O):
    """Concatenate ``T x d_v`` head outputs in head order and multiply by ``W_O``."""
    head_outputs = [as_matrix(o, "head output") for o in head_outputs]
    W_O = as_matrix(W_O, "W_O")
    if not head_outputs:
        raise ShapeError("need at least one head")
    T = head_outputs[0].shape[0]
    if any(o.shape[0] != T for o in head_outputs):
        raise ShapeError("head outputs disagree on sequence length")
    width = sum(o.shape[1] for o in head_outputs)
    if W_O.shape[0] != width:
        raise ShapeError(f"W_O has {W_O.shape[0]} rows, concatenated heads are {width} wide")
    return matmul(np.concatenate(head_outputs, axis=1), W_O)


def _check_input(X, width, name):
    X = as_matrix(X, name)
    if X.shape[0] < 1 or X.shape[1] != width:
        raise ShapeError(f"{name} has shape {X.shape}, expected (T, {width})")
    return X


def causal_self_attention(X, params: LayerParams, causal=True, scale=None):
    """Multi-head self-attention of a ``T x d_model`` sequence.

    With ``causal=True`` position ``t`` attends to positions ``0..t``,
    itself included. ``scale`` defaults to ``1/sqrt(d_k)``.
    """
    if params.d_source != params.d_model:
        raise ShapeError("self-attention needs d_source == d_model")
    X = _check_input(X, params.d_model, "X")
    scale = default_scale(params.d_k) if scale is None else scale
    weights, outputs = [], []
    for h in range(params.heads):
        Q = matmul(X, params.W_Q[h])
        K = matmul(X, params.W_K[h])
        V = matmul(X, params.W_V[h])
        w, o = attend(Q, K, V, scale, causal=causal)
        weights.append(w)
        outputs.append(o)
    Z = concat_heads_and_mix(outputs, params.W_O)
    return AttentionOutput(Z, tuple(weights), tuple(outputs))


def project_encoder(enc_states, params: LayerParams):
    """Per-head ``(K, V)`` of the encoder states, computed once."""
    enc_states = as_matrix(enc_states, "enc_states")
    if enc_states.shape[0] == 0:
        raise EmptyMemory("encoder memory has no rows")
    if enc_states.shape[1] != params.d_source:
        raise ShapeError(f"enc_states has shape {enc_states.shape}, expected (S, {params.d_source})")
    return [
        (matmul(enc_states, params.W_K[h]), matmul(enc_states, params.W_V[h]))
        for h in range(params.heads)
    ]


def cross_attention(X_dec, enc_states, params: LayerParams, scale=None):
    """Decoder queries attending over all encoder rows (no mask).

    Queries come from ``X_dec`` through ``W_Q``; keys and values from
    ``enc_states`` through ``W_K`` and ``W_V``.
    """
    X_dec = _check_input(X_dec, params.d_model, "X_dec")
    kv = project_encoder(enc_states, params)
    scale = default_scale(params.d_k) if scale is None else scale
    weights, outputs = [], []
    for h, (K, V) in enumerate(kv):
        Q = matmul(X_dec, params.W_Q[h])
        w, o = attend(Q, K, V, scale, causal=False)
        weights.append(w)
        outputs.append(o)
    Z = concat_heads_and_mix(outputs, params.W_O)
    return AttentionOutput(Z, tuple(weights), tuple(outputs))
