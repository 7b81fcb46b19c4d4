"""Run the batched and streamed paths on shared inputs and measure the gap."""
from dataclasses import asdict, dataclass, field

import numpy as np

from .attention import causal_self_attention, cross_attention
from .controller import LayerParams, init_params
from .engine import SdncEngine

MODES = ("self", "cross", "paper_restricted")
SCALE_VARIANTS = ("dk", "dv")


@dataclass(frozen=True)
class EquivConfig:
    T: int = 8
    d_model: int = 8
    d_k: int = None
    d_v: int = None
    heads: int = 1
    seed: int = 0
    tol: float = 1e-10
    mode: str = "self"
    S: int = 1
    scale_variant: str = "dk"

    def __post_init__(self):
        # d_k/d_v default to an even split of d_model across heads
        for name in ("d_k", "d_v"):
            if getattr(self, name) is None:
                if self.d_model % self.heads:
                    raise ValueError(f"d_model={self.d_model} not divisible by heads={self.heads}")
                object.__setattr__(self, name, self.d_model // self.heads)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scale_variant not in SCALE_VARIANTS:
            raise ValueError(f"scale_variant must be one of {SCALE_VARIANTS}")
        if min(self.T, self.S, self.d_model, self.d_k, self.d_v, self.heads) < 1:
            raise ValueError("dimensions must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.mode == "paper_restricted" and self.d_k != self.d_v:
            raise ValueError("paper_restricted mode requires d_k == d_v")


@dataclass(frozen=True)
class EquivalenceReport:
    check: str
    max_abs_diff: float
    argmax_position: int
    argmax_component: int
    per_position_diffs: tuple
    passed: bool
    config: EquivConfig = field(repr=False)

    def as_dict(self):
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d


def make_self_instance(cfg):
    """Seeded ``(params, X)``; weights are drawn before inputs."""
    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg.d_model, cfg.d_k, cfg.d_v, cfg.heads, rng)
    if cfg.mode == "paper_restricted":
        # controller reuses its key as the read query and stores values as
        # its addressable rows: W_Q = W_K = W_V
        params = params.replace(W_Q=params.W_K, W_V=params.W_K)
    X = rng.uniform(-1.0, 1.0, (cfg.T, cfg.d_model))
    return params, X


def make_cross_instance(cfg):
    """Seeded ``(cross_params, X_dec, enc_states)`` with equal encoder/decoder widths."""
    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg.d_model, cfg.d_k, cfg.d_v, cfg.heads, rng)
    X_dec = rng.uniform(-1.0, 1.0, (cfg.T, cfg.d_model))
    enc = rng.uniform(-1.0, 1.0, (cfg.S, cfg.d_model))
    return params, X_dec, enc


def stream_scale(cfg):
    d = cfg.d_k if cfg.scale_variant == "dk" else cfg.d_v
    return 1.0 / np.sqrt(d)


def compare(check, streamed, batched, cfg):
    diff = np.abs(np.asarray(streamed) - np.asarray(batched))
    per_position = diff.max(axis=1)
    pos, comp = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[pos, comp])
    return EquivalenceReport(
        check=check,
        max_abs_diff=worst,
        argmax_position=int(pos),
        argmax_component=int(comp),
        per_position_diffs=tuple(float(d) for d in per_position),
        passed=bool(worst <= cfg.tol),
        config=cfg,
    )


def check_self_equivalence(cfg, batched=causal_self_attention, engine_cls=SdncEngine):
    """Causal self-attention vs. a fresh streaming engine on one seeded instance.

    ``batched`` and ``engine_cls`` are injectable so a deliberately broken
    path can be shown to fail.
    """
    if cfg.mode not in ("self", "paper_restricted"):
        raise ValueError(f"self equivalence needs mode self or paper_restricted, got {cfg.mode!r}")
    params, X = make_self_instance(cfg)
    Z = batched(X, params).Z
    streamed = engine_cls(params, read_scale=stream_scale(cfg)).run(X)
    return compare(f"{cfg.mode}_equivalence", streamed, Z, cfg)


def check_cross_equivalence(cfg, batched=cross_attention, engine_cls=SdncEngine):
    """Batched cross-attention vs. a loaded encoder memory read row by row."""
    if cfg.mode != "cross":
        raise ValueError(f"cross equivalence needs mode cross, got {cfg.mode!r}")
    params, X_dec, enc = make_cross_instance(cfg)
    Z = batched(X_dec, enc, params).Z
    engine = engine_cls(_dummy_self_params(params), cross_params=params)
    engine.load_encoder_memory(enc)
    streamed = np.stack([engine.cross_step(x) for x in X_dec])
    return compare("cross_equivalence", streamed, Z, cfg)


def _dummy_self_params(cross_params: LayerParams):
    # the engine always owns self weights; cross checks never step it
    H, d_model, d_k = cross_params.W_Q.shape
    return LayerParams(
        cross_params.W_Q,
        np.zeros((H, d_model, d_k)),
        np.zeros((H, d_model, cross_params.d_v)),
        cross_params.W_O,
    )


def check_causality(cfg, perturb_position):
    """Does adding 1.0 to row ``perturb_position`` (1-based) leave earlier outputs alone?

    Streamed rows must be bit-identical; batched rows within 1e-15.
    """
    if not 1 <= perturb_position <= cfg.T:
        raise IndexError(f"perturb_position {perturb_position} outside 1..{cfg.T}")
    params, X = make_self_instance(cfg)
    Xp = X.copy()
    Xp[perturb_position - 1] += 1.0
    p = perturb_position - 1
    scale = stream_scale(cfg)
    s0 = SdncEngine(params, read_scale=scale).run(X)[:p]
    s1 = SdncEngine(params, read_scale=scale).run(Xp)[:p]
    b0 = causal_self_attention(X, params).Z[:p]
    b1 = causal_self_attention(Xp, params).Z[:p]
    streamed_same = s0.tobytes() == s1.tobytes()
    batched_same = p == 0 or float(np.max(np.abs(b0 - b1))) <= 1e-15
    return bool(streamed_same and batched_same)
