"""Streaming stateless DNC.

The engine consumes one token at a time. Per head, the controller's key
and value are appended to that head's write-once memory, then the query
reads the memory by content. Output projection mixes the per-head
readouts. An optional second family of sealed memories holds projected
encoder states for cross-attention reads.
"""
import numpy as np

from .attention import concat_heads_and_mix, default_scale
from .controller import LayerParams, project, project_key_value, project_query
from .errors import AlreadyLoaded, EncoderMemoryMissing, NonFreshEngine, ShapeError
from .linalg import as_matrix, as_vector
from .memory import WriteOnceMemory


class SdncEngine:
    """One logical stream over a fixed set of layer weights.

    Parameters
    ----------
    params : LayerParams
        Self-attention weights (``d_source == d_model``).
    cross_params : LayerParams, optional
        Cross-attention weights; ``W_K``/``W_V`` are shaped for the encoder
        width. Needed only for :meth:`load_encoder_memory` and :meth:`cross_step`.
    read_scale : float, optional
        Logit scale for self reads, ``1/sqrt(d_k)`` by default.
    """

    def __init__(self, params: LayerParams, cross_params: LayerParams = None, read_scale=None):
        if params.d_source != params.d_model:
            raise ShapeError("self-attention needs d_source == d_model")
        self.params = params
        self.cross_params = cross_params
        self.read_scale = default_scale(params.d_k) if read_scale is None else float(read_scale)
        self.self_memories = [WriteOnceMemory(params.d_k, params.d_v) for _ in range(params.heads)]
        self.enc_memories = None
        self.last_reads = ()
        self._t = 0

    @property
    def step_count(self):
        return self._t

    def _mix(self, readouts, W_O):
        return concat_heads_and_mix([r[np.newaxis, :] for r in readouts], W_O)[0]

    def step(self, x_t):
        """Write the token's key/value, then read; returns the layer output ``z_t``.

        Appending before reading lets position ``t`` attend to itself.
        """
        x_t = as_vector(x_t, "x_t")
        if x_t.shape[0] != self.params.d_model:
            raise ShapeError(f"x_t has length {x_t.shape[0]}, expected {self.params.d_model}")
        reads = []
        for h, mem in enumerate(self.self_memories):
            tok = project(x_t, self.params, h, position=self._t)
            mem.append(tok.k, tok.v)
            reads.append(mem.content_read(tok.q, self.read_scale))
        self.last_reads = tuple(reads)
        self._t += 1
        return self._mix([r.readout for r in reads], self.params.W_O)

    def run(self, X):
        """Stream every row of ``X`` through a fresh engine."""
        if self._t != 0:
            raise NonFreshEngine(f"engine has already consumed {self._t} tokens")
        X = as_matrix(X, "X")
        if X.shape[0] < 1 or X.shape[1] != self.params.d_model:
            raise ShapeError(f"X has shape {X.shape}, expected (T, {self.params.d_model})")
        return np.stack([self.step(x) for x in X])

    def load_encoder_memory(self, enc_states):
        """Project encoder rows to keys/values per head and seal them."""
        if self.enc_memories is not None:
            raise AlreadyLoaded("encoder memory is already loaded")
        if self.cross_params is None:
            raise EncoderMemoryMissing("engine has no cross-attention parameters")
        cp = self.cross_params
        enc_states = as_matrix(enc_states, "enc_states")
        if enc_states.shape[0] < 1 or enc_states.shape[1] != cp.d_source:
            raise ShapeError(f"enc_states has shape {enc_states.shape}, expected (S, {cp.d_source})")
        memories = []
        for h in range(cp.heads):
            mem = WriteOnceMemory(cp.d_k, cp.d_v, capacity=enc_states.shape[0])
            for s in enc_states:
                mem.append(*project_key_value(s, cp, h))
            mem.seal()
            memories.append(mem)
        self.enc_memories = memories

    def cross_step(self, x_t):
        """Read the encoder memories with the decoder token's query.

        Leaves the self memories and the step count untouched.
        """
        if self.enc_memories is None:
            raise EncoderMemoryMissing("call load_encoder_memory first")
        cp = self.cross_params
        scale = default_scale(cp.d_k)
        readouts = [
            mem.content_read(project_query(x_t, cp, h), scale).readout
            for h, mem in enumerate(self.enc_memories)
        ]
        return self._mix(readouts, cp.W_O)
