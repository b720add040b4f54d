"""Numerical laboratory for weak solutions of the Camassa-Holm and
Hunter-Saxton equations: characteristics, slope transport and the
transfer of energy between positive- and negative-slope parts."""

from peakonlab.errors import (
    ArgumentOutOfRange,
    CollisionImminent,
    InsufficientSamples,
    NonCauchy,
    OutOfSpan,
    PeakonlabError,
    RegimeViolated,
    SlopeMismatch,
    VFloorViolated,
    WindowInverted,
)
from peakonlab.kernel import CAMASSA_HOLM, HUNTER_SAXTON, KernelSpec
from peakonlab.profile import EnergySplit, WaveProfile

__version__ = "0.1.0"

__all__ = [
    "ArgumentOutOfRange",
    "CAMASSA_HOLM",
    "CollisionImminent",
    "EnergySplit",
    "HUNTER_SAXTON",
    "InsufficientSamples",
    "KernelSpec",
    "NonCauchy",
    "OutOfSpan",
    "PeakonlabError",
    "RegimeViolated",
    "SlopeMismatch",
    "VFloorViolated",
    "WaveProfile",
    "WindowInverted",
]
