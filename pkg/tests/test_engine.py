import numpy as np
import pytest

from sdnc.attention import causal_self_attention, cross_attention
from sdnc.controller import init_params, project, project_key_value
from sdnc.engine import SdncEngine
from sdnc.errors import (
    AlreadyLoaded,
    EncoderMemoryMissing,
    NonFreshEngine,
    SealedMemory,
    ShapeError,
)


def test_first_step(small_params, rng):
    x = rng.uniform(-1, 1, 8)
    engine = SdncEngine(small_params)
    z = engine.step(x)
    assert [m.size() for m in engine.self_memories] == [1, 1]
    assert [r.weights.tolist() for r in engine.last_reads] == [[1.0], [1.0]]
    values = np.concatenate([project(x, small_params, h).v for h in range(2)])
    np.testing.assert_allclose(z, values @ small_params.W_O, rtol=0, atol=1e-15)
    assert engine.step_count == 1


def test_repeated_input_splits_weight(small_params, rng):
    x = rng.uniform(-1, 1, 8)
    engine = SdncEngine(small_params)
    engine.step(x)
    engine.step(x)
    assert [r.weights.tolist() for r in engine.last_reads] == [[0.5, 0.5]] * 2


def test_seed42_stream_matches_batched():
    rng = np.random.default_rng(42)
    params = init_params(8, 4, 4, 2, rng)
    X = rng.uniform(-1, 1, (16, 8))
    streamed = SdncEngine(params).run(X)
    np.testing.assert_allclose(streamed, causal_self_attention(X, params).Z, rtol=0, atol=1e-10)


def test_run_is_sequential_steps(small_params, rng):
    X = rng.uniform(-1, 1, (7, 8))
    stepped = SdncEngine(small_params)
    rows = np.stack([stepped.step(x) for x in X])
    ran = SdncEngine(small_params)
    assert ran.run(X).tobytes() == rows.tobytes()
    assert ran.step_count == 7
    assert all(m.size() == 7 for m in ran.self_memories)


def test_run_single_row(small_params, rng):
    x = rng.uniform(-1, 1, 8)
    assert SdncEngine(small_params).run(x[None]).tobytes() == SdncEngine(small_params).step(x)[None].tobytes()


def test_run_requires_fresh_engine(small_params):
    engine = SdncEngine(small_params)
    engine.step(np.zeros(8))
    with pytest.raises(NonFreshEngine):
        engine.run(np.zeros((2, 8)))


def test_shape_errors(small_params):
    engine = SdncEngine(small_params)
    with pytest.raises(ShapeError):
        engine.step(np.zeros(5))
    with pytest.raises(ShapeError):
        engine.run(np.zeros((3, 5)))
    assert engine.step_count == 0


def test_streaming_causality(small_params, rng):
    X = rng.uniform(-1, 1, (10, 8))
    Xp = X.copy()
    Xp[6:] = rng.uniform(-1, 1, (4, 8))
    a = SdncEngine(small_params).run(X)
    b = SdncEngine(small_params).run(Xp)
    assert a[:6].tobytes() == b[:6].tobytes()


def test_two_engines_agree(small_params, rng):
    X = rng.uniform(-1, 1, (12, 8))
    e1, e2 = SdncEngine(small_params), SdncEngine(small_params)
    assert e1.run(X).tobytes() == e2.run(X).tobytes()
    for m1, m2 in zip(e1.self_memories, e2.self_memories):
        assert m1.keys.tobytes() == m2.keys.tobytes()
        assert m1.values.tobytes() == m2.values.tobytes()


def test_single_track_when_keys_equal_values(rng):
    params = init_params(6, 3, 3, 2, rng)
    params = params.replace(W_V=params.W_K)
    X = rng.uniform(-1, 1, (9, 6))
    engine = SdncEngine(params)
    streamed = engine.run(X)
    for mem in engine.self_memories:
        assert mem.keys.tobytes() == mem.values.tobytes()
    np.testing.assert_allclose(streamed, causal_self_attention(X, params).Z, rtol=0, atol=1e-10)


class TestEncoderMemory:
    def make(self, S=5, seed=42):
        rng = np.random.default_rng(seed)
        self_params = init_params(8, 4, 4, 2, rng)
        cross = init_params(8, 4, 4, 2, rng)
        enc = rng.uniform(-1, 1, (S, 8))
        engine = SdncEngine(self_params, cross_params=cross)
        engine.load_encoder_memory(enc)
        return engine, cross, enc, rng

    def test_single_row(self):
        engine, cross, enc, rng = self.make(S=1)
        assert [m.size() for m in engine.enc_memories] == [1, 1]
        expected = np.concatenate([project_key_value(enc[0], cross, h)[1] for h in range(2)]) @ cross.W_O
        for _ in range(3):
            np.testing.assert_allclose(engine.cross_step(rng.uniform(-1, 1, 8)), expected, rtol=0, atol=1e-15)

    def test_sealed(self):
        engine, *_ = self.make()
        for mem in engine.enc_memories:
            with pytest.raises(SealedMemory):
                mem.append(np.zeros(4), np.zeros(4))

    def test_rows_equal_rowwise_projection(self):
        engine, cross, enc, _ = self.make()
        for h, mem in enumerate(engine.enc_memories):
            for s in range(enc.shape[0]):
                k, v = project_key_value(enc[s], cross, h)
                assert mem.key_row(s).tobytes() == k.tobytes()
                assert mem.value_row(s).tobytes() == v.tobytes()

    def test_already_loaded(self):
        engine, _, enc, _ = self.make()
        with pytest.raises(AlreadyLoaded):
            engine.load_encoder_memory(enc)

    def test_missing(self, small_params):
        with pytest.raises(EncoderMemoryMissing):
            SdncEngine(small_params, cross_params=small_params).cross_step(np.zeros(8))
        with pytest.raises(EncoderMemoryMissing):
            SdncEngine(small_params).load_encoder_memory(np.zeros((2, 8)))

    def test_shape_errors(self, small_params):
        engine = SdncEngine(small_params, cross_params=small_params)
        with pytest.raises(ShapeError):
            engine.load_encoder_memory(np.zeros((0, 8)))
        with pytest.raises(ShapeError):
            engine.load_encoder_memory(np.zeros((3, 7)))
        engine.load_encoder_memory(np.zeros((3, 8)))
        with pytest.raises(ShapeError):
            engine.cross_step(np.zeros(7))

    def test_stateless_and_independent_of_self_steps(self):
        engine, cross, enc, rng = self.make()
        x = rng.uniform(-1, 1, 8)
        before = engine.cross_step(x)
        assert engine.cross_step(x).tobytes() == before.tobytes()
        for _ in range(5):
            engine.step(rng.uniform(-1, 1, 8))
        assert engine.cross_step(x).tobytes() == before.tobytes()
        assert engine.step_count == 5

    def test_cross_step_does_not_touch_self_memory(self):
        engine, _, _, rng = self.make()
        engine.cross_step(rng.uniform(-1, 1, 8))
        assert engine.step_count == 0
        assert all(m.size() == 0 for m in engine.self_memories)

    def test_matches_batched_cross_attention(self):
        engine, cross, enc, rng = self.make(S=5, seed=42)
        X = rng.uniform(-1, 1, (3, 8))
        streamed = np.stack([engine.cross_step(x) for x in X])
        np.testing.assert_allclose(streamed, cross_attention(X, enc, cross).Z, rtol=0, atol=1e-10)

    def test_different_encoder_width(self, rng):
        self_params = init_params(8, 4, 4, 2, rng)
        cross = init_params(8, 4, 3, 2, rng, d_source=11)
        enc, X = rng.uniform(-1, 1, (6, 11)), rng.uniform(-1, 1, (4, 8))
        engine = SdncEngine(self_params, cross_params=cross)
        engine.load_encoder_memory(enc)
        streamed = np.stack([engine.cross_step(x) for x in X])
        np.testing.assert_allclose(streamed, cross_attention(X, enc, cross).Z, rtol=0, atol=1e-10)
