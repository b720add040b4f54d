"""Kernels A(x, y) of the nonlocal transport equation

    u_t + u u_x = int A(x, y) [a u^2 + b u_x^2] dy

for Camassa-Holm and Hunter-Saxton, and the four-term splitting of the
difference quotient K_t(y) = (A(eta, y) - A(zeta, y)) / (eta - zeta).

All sign functions follow the convention sgn(0) = 0.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class KernelId(str, Enum):
    CAMASSA_HOLM = "CamassaHolm"
    HUNTER_SAXTON = "HunterSaxton"


@dataclass(frozen=True)
class KernelSpec:
    kernel_id: KernelId
    a: float
    b: float
    L: float
    C1: float
    C2: float
    C3: float

    def __post_init__(self):
        if self.a < 0 or self.b <= 0:
            raise ValueError("need a >= 0 and b > 0")
        if min(self.L, self.C1, self.C2, self.C3) < 0:
            raise ValueError("Lipschitz and decomposition constants must be >= 0")

    @property
    def is_ch(self):
        return self.kernel_id is KernelId.CAMASSA_HOLM

    @classmethod
    def from_name(cls, name):
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        if key in ("ch", "camassaholm"):
            return CAMASSA_HOLM
        if key in ("hs", "huntersaxton"):
            return HUNTER_SAXTON
        raise ValueError(f"unknown equation {name!r}")


CAMASSA_HOLM = KernelSpec(KernelId.CAMASSA_HOLM, a=1.0, b=0.5, L=1.0, C1=1.0, C2=2.0, C3=1.0)
HUNTER_SAXTON = KernelSpec(KernelId.HUNTER_SAXTON, a=0.0, b=0.5, L=0.0, C1=1.0, C2=0.0, C3=0.0)


@dataclass(frozen=True)
class KernelDecomposition:
    """K_t(y) = L_term + L1 + L2 + L3 at one point y for a pair zeta < eta."""

    L_term: float
    L1: float
    L2: float
    L3: float

    @property
    def total(self):
        return self.L_term + self.L1 + self.L2 + self.L3


def eval_A(spec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.is_ch:
        d = x - y
        out = 0.5 * np.sign(d) * np.exp(-np.abs(d))
    else:
        out = (y <= x).astype(float)
    return out if out.ndim else float(out)


def eval_L_smooth(spec, zeta, y):
    """The eta-independent part L(zeta, y) of the splitting."""
    zeta = np.asarray(zeta, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.is_ch:
        out = -0.5 * np.exp(-np.abs(zeta - y))
    else:
        out = np.zeros(np.broadcast(zeta, y).shape)
    return out if out.ndim else float(out)


def difference_quotient(spec, zeta, eta, y):
    return (eval_A(spec, eta, y) - eval_A(spec, zeta, y)) / (np.asarray(eta) - np.asarray(zeta))


def _ch_terms(zeta, eta, y):
    """Raw pieces K11, K12, K21, K22 for Camassa-Holm (vectorised)."""
    h = eta - zeta
    e_zeta = np.exp(-np.abs(zeta - y))
    e_eta = np.exp(-np.abs(eta - y))
    # (sgn(eta-y) - sgn(zeta-y)) / 2: 1 inside, 1/2 on the endpoints, 0 outside
    w = 0.5 * (np.sign(eta - y) - np.sign(zeta - y))
    k11 = w / h
    k12 = w * (e_eta - 1.0) / h
    sigma = np.sign(zeta - y)
    # closed-form antiderivatives of sgn(s-y) e^{-|s-y|} and sgn(s-y) over [zeta, eta]
    int_sgn_exp = e_zeta - e_eta
    int_sgn = np.abs(eta - y) - np.abs(zeta - y)
    k21 = sigma * (int_sgn_exp - e_zeta * int_sgn) / (2.0 * h)
    k22 = (sigma * e_zeta * int_sgn - h * e_zeta) / (2.0 * h)
    k22 = np.where((y < zeta) | (y > eta), 0.0, k22)
    return k11, k12, k21, k22


def decompose_K(spec, zeta, eta, y):
    if not eta > zeta:
        raise ValueError(f"decomposition needs eta > zeta, got zeta={zeta}, eta={eta}")
    h = eta - zeta
    if spec.is_ch:
        k11, k12, k21, k22 = (float(v) for v in _ch_terms(float(zeta), float(eta), float(y)))
        return KernelDecomposition(
            L_term=float(eval_L_smooth(spec, zeta, y)),
            L1=spec.C1 * k11,
            L2=k12 - k22,
            L3=-k21,
        )
    inside = 1.0 if zeta < y <= eta else 0.0
    return KernelDecomposition(L_term=0.0, L1=spec.C1 * inside / h, L2=0.0, L3=0.0)


def decompose_K_array(spec, zeta, eta, y):
    """Vectorised decomposition; returns a (4, n) array of L_term, L1, L2, L3."""
    zeta, eta, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (zeta, eta, y)))
    if np.any(eta <= zeta):
        raise ValueError("decomposition needs eta > zeta")
    h = eta - zeta
    if spec.is_ch:
        k11, k12, k21, k22 = _ch_terms(zeta, eta, y)
        return np.stack([eval_L_smooth(spec, zeta, y) * np.ones_like(y), spec.C1 * k11, k12 - k22, -k21])
    inside = ((y > zeta) & (y <= eta)).astype(float)
    z = np.zeros_like(y)
    return np.stack([z, spec.C1 * inside / h, z, z])


@dataclass(frozen=True)
class LipschitzReport:
    min_quotient: float
    samples: int
    passed: bool


def _sample_triples(rng, samples, scale=5.0):
    x1 = rng.uniform(-scale, scale, samples)
    gap = np.exp(rng.uniform(np.log(1e-6), np.log(2 * scale), samples))
    y = rng.uniform(-scale, scale, samples)
    # a share of samples places y inside or next to the pair, where the kernel jumps
    near = rng.random(samples) < 0.3
    y[near] = x1[near] + gap[near] * rng.uniform(-0.5, 1.5, near.sum())
    return x1, x1 + gap, y


def verify_one_sided_lipschitz(spec, samples, seed=0, tol=1e-12):
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x1, x2, y = _sample_triples(rng, samples)
    q = np.asarray(difference_quotient(spec, x1, x2, y))
    m = float(q.min())
    return LipschitzReport(min_quotient=m, samples=samples, passed=m >= -spec.L - tol)


@dataclass(frozen=True)
class DecompositionReport:
    samples: int
    max_reconstruction_error: float
    max_relative_error: float
    l1_violations: int
    l2_violations: int
    l3_violations: int
    lipschitz_violations: int

    @property
    def passed(self):
        return (
            self.l1_violations == 0
            and self.l2_violations == 0
            and self.l3_violations == 0
            and self.lipschitz_violations == 0
        )


def check_decomposition(spec, samples, seed=0, bound_tol=1e-10):
    """Reconstruction and bound checks of the splitting on random triples."""
    rng = np.random.default_rng(seed)
    zeta, eta, y = _sample_triples(rng, samples)
    # keep the pair width away from the cancellation regime of the raw quotient
    eta = zeta + np.maximum(eta - zeta, 1e-2)
    h = eta - zeta
    terms = decompose_K_array(spec, zeta, eta, y)
    raw = difference_quotient(spec, zeta, eta, y)
    err = np.abs(terms.sum(axis=0) - raw)
    rel = err / np.maximum(np.abs(raw), 1.0)
    closed = (y >= zeta) & (y <= eta)
    # endpoints carry half weight (CH) or are excluded (HS); they have measure zero
    interior = ~((y == zeta) | (y == eta))
    l1_bad = interior & (np.abs(np.abs(terms[1]) - spec.C1 / h * closed) > bound_tol * np.maximum(1.0, 1.0 / h))
    l2_bad = np.abs(terms[2]) > spec.C2 * closed + bound_tol
    l3_bad = np.abs(terms[3]) > spec.C3 * h + bound_tol
    lip_bad = raw < -spec.L - bound_tol
    return DecompositionReport(
        samples=samples,
        max_reconstruction_error=float(err.max()),
        max_relative_error=float(rel.max()),
        l1_violations=int(l1_bad.sum()),
        l2_violations=int(l2_bad.sum()),
        l3_violations=int(l3_bad.sum()),
        lipschitz_violations=int(lip_bad.sum()),
    )
