"""Causal multi-head attention computed two ways.

``attention`` evaluates whole sequences at once; ``engine`` streams one
token at a time through a stateless controller, a write-once memory and
content-based read heads. ``equivalence`` runs both on seeded instances
and reports the largest disagreement; ``grad`` checks a hand-written
backward pass against finite differences.
"""
from .attention import (
    AttentionOutput,
    attend,
    causal_self_attention,
    concat_heads_and_mix,
    cross_attention,
    default_scale,
)
from .controller import LayerParams, ProjectedToken, init_params, project, project_sequence
from .engine import SdncEngine
from .equivalence import (
    EquivalenceReport,
    EquivConfig,
    check_causality,
    check_cross_equivalence,
    check_self_equivalence,
)
from .errors import (
    AlreadyLoaded,
    EmptyInput,
    EmptyMemory,
    EncoderMemoryMissing,
    NonFiniteInput,
    NonFreshEngine,
    SdncError,
    SealedMemory,
    ShapeError,
)
from .grad import GradCheckReport, GradientBundle, attention_backward, finite_diff_check
from .linalg import matmul, matvec, softmax_stable
from .memory import ReadResult, WriteOnceMemory

__version__ = "0.1.0"
