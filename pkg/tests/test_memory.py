import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdnc.errors import EmptyMemory, SealedMemory, ShapeError
from sdnc.memory import WriteOnceMemory


def filled(n, d_k=3, d_v=2, seed=0):
    rng = np.random.default_rng(seed)
    mem = WriteOnceMemory(d_k, d_v, capacity=1)
    for _ in range(n):
        mem.append(rng.uniform(-1, 1, d_k), rng.uniform(-1, 1, d_v))
    return mem


class TestAppend:
    def test_first_slot(self):
        assert WriteOnceMemory(2, 2).append([1, 2], [3, 4]) == 0

    def test_slots_and_size(self):
        mem = WriteOnceMemory(1, 1)
        assert mem.size() == 0
        assert [mem.append([i], [i]) for i in range(3)] == [0, 1, 2]
        assert mem.size() == len(mem) == 3

    def test_snapshot_survives_appends(self):
        mem = filled(1)
        k0, v0 = mem.key_row(0).tobytes(), mem.value_row(0).tobytes()
        rng = np.random.default_rng(9)
        for _ in range(100):
            mem.append(rng.standard_normal(3), rng.standard_normal(2))
        assert mem.key_row(0).tobytes() == k0
        assert mem.value_row(0).tobytes() == v0

    def test_shape_error(self):
        mem = WriteOnceMemory(2, 3)
        with pytest.raises(ShapeError):
            mem.append([1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ShapeError):
            mem.append([1.0, 2.0], [1.0])
        assert mem.size() == 0

    def test_no_mutation_surface(self):
        mem = filled(2)
        for name in ("write", "erase", "insert", "overwrite", "__setitem__", "__delitem__"):
            assert not hasattr(mem, name)
        with pytest.raises(ValueError):
            mem.keys[0, 0] = 1.0
        with pytest.raises(ValueError):
            mem.values[1, 0] = 1.0

    def test_sealed(self):
        mem = filled(2)
        mem.seal()
        with pytest.raises(SealedMemory):
            mem.append(np.zeros(3), np.zeros(2))
        assert mem.size() == 2


class TestContentRead:
    def test_single_slot(self):
        mem = WriteOnceMemory(2, 3)
        mem.append([0.3, -2.0], [1.5, -0.25, 7.0])
        res = mem.content_read([10.0, 4.0], 0.5)
        assert res.weights.tolist() == [1.0]
        assert res.readout.tolist() == [1.5, -0.25, 7.0]

    def test_identical_keys(self):
        mem = WriteOnceMemory(2, 2)
        mem.append([1.0, 2.0], [1.0, 0.0])
        mem.append([1.0, 2.0], [0.0, 3.0])
        res = mem.content_read([0.7, -0.1], 1.0)
        assert res.weights.tolist() == [0.5, 0.5]
        assert res.readout.tolist() == [0.5, 1.5]

    def test_ln3(self):
        mem = WriteOnceMemory(1, 2)
        mem.append([0.0], [1.0, 0.0])
        mem.append([1.0], [0.0, 1.0])
        res = mem.content_read([math.log(3.0)], 1.0)
        np.testing.assert_allclose(res.weights, [0.25, 0.75], atol=1e-15)
        np.testing.assert_allclose(res.readout, [0.25, 0.75], atol=1e-15)

    def test_errors(self):
        mem = WriteOnceMemory(2, 2)
        with pytest.raises(EmptyMemory):
            mem.content_read([1.0, 1.0], 1.0)
        mem.append([1.0, 1.0], [1.0, 1.0])
        with pytest.raises(ShapeError):
            mem.content_read([1.0], 1.0)
        with pytest.raises(ValueError):
            mem.content_read([1.0, 1.0], 0.0)

    def test_purity(self):
        mem = filled(20)
        q = np.array([0.2, -0.4, 0.9])
        a, b = mem.content_read(q, 0.5), mem.content_read(q, 0.5)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.readout.tobytes() == b.readout.tobytes()
        assert mem.size() == 20

    def test_readout_is_weighted_value_sum(self):
        mem = filled(7)
        res = mem.content_read([0.1, 0.2, 0.3], 0.7)
        expected = np.zeros(2)
        for j in range(7):
            expected = expected + res.weights[j] * mem.value_row(j)
        assert res.readout.tobytes() == expected.tobytes()


def test_default_scale():
    mem = filled(6, d_k=4)
    q = np.array([0.5, -1.0, 2.0, 0.1])
    assert mem.content_read(q).weights.tobytes() == mem.content_read(q, 0.5).weights.tobytes()


def test_logit_prefix_consistency():
    short = filled(5, seed=3)
    longer = filled(12, seed=3)
    q = np.array([1.0, -0.5, 0.25])
    assert short.logits(q, 0.3).tobytes() == longer.logits(q, 0.3)[:5].tobytes()


@settings(max_examples=50)
@given(st.integers(1, 40), st.integers(0, 10_000), st.floats(0.01, 5.0))
def test_simplex_and_convex_hull(n, seed, scale):
    mem = filled(n, d_k=4, d_v=3, seed=seed)
    q = np.random.default_rng(seed + 1).uniform(-5, 5, 4)
    res = mem.content_read(q, scale)
    assert res.weights.shape == (n,)
    assert np.all(res.weights >= 0)
    assert abs(res.weights.sum() - 1.0) <= 1e-12
    V = mem.values
    assert np.all(res.readout >= V.min(axis=0) - 1e-12)
    assert np.all(res.readout <= V.max(axis=0) + 1e-12)


def test_from_rows_is_sealed():
    mem = WriteOnceMemory.from_rows(np.ones((3, 2)), np.zeros((3, 4)))
    assert mem.sealed and mem.size() == 3
    with pytest.raises(ShapeError):
        WriteOnceMemory.from_rows(np.ones((3, 2)), np.zeros((2, 4)))
