"""Write-once external memory with content-based reads."""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptyMemory, SealedMemory, ShapeError
from .linalg import as_vector, dot_kernel, softmax_kernel


@njit(cache=True, nogil=True, fastmath=False)
def content_read_kernel(keys, values, n, query, scale, logits, weights, readout):
    """Read rows ``0..n-1``: softmax of scaled key/query dots, then a weighted value sum.

    The value sum for each component runs over rows in increasing index.
    """
    for j in range(n):
        logits[j] = scale * dot_kernel(keys[j], query)
    softmax_kernel(logits, n, weights)
    for i in range(values.shape[1]):
        acc = 0.0
        for j in range(n):
            acc += weights[j] * values[j, i]
        readout[i] = acc


@dataclass(frozen=True)
class ReadResult:
    weights: np.ndarray
    readout: np.ndarray


class WriteOnceMemory:
    """Append-only store of (key, value) row pairs.

    Rows can only be appended; there is no way to overwrite, erase or
    insert. A sealed memory rejects further appends.
    """

    def __init__(self, d_k, d_v, capacity=16):
        if d_k < 1 or d_v < 1:
            raise ShapeError("memory widths must be >= 1")
        self.d_k = d_k
        self.d_v = d_v
        self._keys = np.empty((max(capacity, 1), d_k))
        self._values = np.empty((max(capacity, 1), d_v))
        self._size = 0
        self._sealed = False

    @classmethod
    def from_rows(cls, keys, values, seal=True):
        keys = np.asarray(keys, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if keys.ndim != 2 or values.ndim != 2 or keys.shape[0] != values.shape[0]:
            raise ShapeError(f"key rows {keys.shape} and value rows {values.shape} do not pair up")
        mem = cls(keys.shape[1], values.shape[1], capacity=keys.shape[0])
        for k, v in zip(keys, values):
            mem.append(k, v)
        if seal:
            mem.seal()
        return mem

    def __len__(self):
        return self._size

    def size(self):
        return self._size

    @property
    def sealed(self):
        return self._sealed

    def seal(self):
        self._sealed = True

    def append(self, key, value):
        """Store one row pair and return its slot index."""
        if self._sealed:
            raise SealedMemory("memory is sealed; appends are not permitted")
        key = as_vector(key, "key")
        value = as_vector(value, "value")
        if key.shape[0] != self.d_k or value.shape[0] != self.d_v:
            raise ShapeError(
                f"expected key/value of lengths ({self.d_k}, {self.d_v}), "
                f"got ({key.shape[0]}, {value.shape[0]})"
            )
        slot = self._size
        if slot == self._keys.shape[0]:
            self._grow()
        self._keys[slot] = key
        self._values[slot] = value
        self._size = slot + 1
        return slot

    def _grow(self):
        cap = 2 * self._keys.shape[0]
        keys = np.empty((cap, self.d_k))
        values = np.empty((cap, self.d_v))
        keys[: self._size] = self._keys[: self._size]
        values[: self._size] = self._values[: self._size]
        self._keys, self._values = keys, values

    @property
    def keys(self):
        view = self._keys[: self._size]
        view.flags.writeable = False
        return view

    @property
    def values(self):
        view = self._values[: self._size]
        view.flags.writeable = False
        return view

    def key_row(self, i):
        return self.keys[i].copy()

    def value_row(self, i):
        return self.values[i].copy()

    def logits(self, query, scale):
        """Scaled key/query scores for every stored row."""
        query = self._check_query(query, scale)
        out = np.empty(self._size)
        for j in range(self._size):
            out[j] = scale * dot_kernel(self._keys[j], query)
        return out

    def content_read(self, query, scale=None):
        """Soft-address the memory with ``query``.

        ``weights = softmax(scale * keys @ query)`` and
        ``readout = sum_j weights[j] * values[j]``; ``scale`` defaults to
        ``1/sqrt(d_k)``. Does not modify the memory.
        """
        scale = 1.0 / math.sqrt(self.d_k) if scale is None else scale
        query = self._check_query(query, scale)
        n = self._size
        logits = np.empty(n)
        weights = np.empty(n)
        readout = np.empty(self.d_v)
        content_read_kernel(self._keys, self._values, n, query, float(scale), logits, weights, readout)
        return ReadResult(weights, readout)

    def _check_query(self, query, scale):
        if self._size == 0:
            raise EmptyMemory("cannot read from an empty memory")
        query = as_vector(query, "query")
        if query.shape[0] != self.d_k:
            raise ShapeError(f"query has length {query.shape[0]}, expected d_k={self.d_k}")
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        return query
