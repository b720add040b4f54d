"""Energy ledgers between characteristics, one-sided limits in time, the
atoms of the dissipation/accretion measures mu^+ and mu^-, binned
nu-measures and the short-time lower bound for the positive slope energy.
"""

import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from peakonlab.errors import InsufficientSamples, NonCauchy, RegimeViolated, WindowInverted
from peakonlab.exact import PeakonField

MIN_K = 6
NOISE_FACTOR = 10.0


class LimitSide(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


# ------------------------------------------------------------ test functions
@dataclass(frozen=True)
class StepFunction:
    """sum_i c_i 1_[a_i, a_{i+1})."""

    breakpoints: tuple
    coefficients: tuple

    def __post_init__(self):
        a = np.asarray(self.breakpoints, dtype=float)
        c = np.asarray(self.coefficients, dtype=float)
        if a.size == 0 and c.size == 0:
            pass
        elif a.size != c.size + 1 or np.any(np.diff(a) <= 0):
            raise ValueError("need increasing breakpoints, one more than coefficients")
        if np.any(c < 0):
            raise ValueError("step coefficients must be >= 0")
        object.__setattr__(self, "breakpoints", tuple(a.tolist()))
        object.__setattr__(self, "coefficients", tuple(c.tolist()))

    @classmethod
    def indicator(cls, lo, hi, value=1.0):
        return cls((lo, hi), (value,))

    def pieces(self):
        a = self.breakpoints
        return [(a[i], a[i + 1], c) for i, c in enumerate(self.coefficients)]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.coefficients:
            return np.zeros_like(x)
        a = np.asarray(self.breakpoints)
        c = np.concatenate([[0.0], self.coefficients, [0.0]])
        return c[np.searchsorted(a, x, side="right")]

    def __len__(self):
        return len(self.coefficients)


def step_approximate(phi, eps, support=None, n_samples=20001):
    """Step function within eps of phi in sup norm, with neighbouring
    coefficients at most eps apart and end coefficients below eps.

    phi is either (x, values) samples or a callable together with its support."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if callable(phi):
        if support is None:
            raise ValueError("a callable test function needs its support")
        xs = np.linspace(support[0], support[1], n_samples)
        fs = np.asarray(phi(xs), dtype=float)
    else:
        xs, fs = (np.asarray(v, dtype=float) for v in phi)
    if np.any(fs < 0):
        raise ValueError("test function must be nonnegative")
    if not np.any(fs > 0):
        return StepFunction((), ())
    tol = eps * (1 + 1e-12)
    breaks, coefs = [xs[0]], []
    i, n = 0, xs.size
    while i < n - 1:
        lo = hi = fs[i]
        j = i
        # grow the cell while the oscillation of phi stays within eps
        while j + 1 < n and max(hi, fs[j + 1]) - min(lo, fs[j + 1]) <= tol:
            j += 1
            lo, hi = min(lo, fs[j]), max(hi, fs[j])
        if j == i:
            j = i + 1
            lo, hi = min(lo, fs[j]), max(hi, fs[j])
        breaks.append(xs[j])
        coefs.append(0.5 * (lo + hi))
        i = j
    return StepFunction(tuple(breaks), tuple(coefs))


def _as_step(phi, eps=1e-3):
    if isinstance(phi, StepFunction):
        return phi
    if isinstance(phi, tuple) and len(phi) == 2 and callable(phi[0]):
        return step_approximate(phi[0], eps, support=phi[1])
    raise TypeError("test function must be a StepFunction or (callable, support)")


def phi_energy(handle, phi, t):
    """(int phi (u_x^+)^2, int phi (u_x^-)^2) at time t."""
    step = _as_step(phi)
    ep = em = 0.0
    for a, b, c in step.pieces():
        if c:
            es = handle.energy_split(t, a, b)
            ep += c * es.e_plus
            em += c * es.e_minus
    return ep, em


# ------------------------------------------------------------------ ledger
def _position(w, t):
    if isinstance(w, (int, float, np.floating)):
        return float(w)
    return w.at(t)[0]


@dataclass
class EnergyLedger:
    times: np.ndarray
    e_plus: np.ndarray
    e_minus: np.ndarray
    e_u: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    window: tuple = field(default=None, repr=False)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,e_plus,e_minus\n")
        for t, a, b in zip(self.times.tolist(), self.e_plus.tolist(), self.e_minus.tolist()):
            buf.write(f"{t!r},{a!r},{b!r}\n")
        return buf.getvalue()

    @staticmethod
    def from_csv(text):
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].replace(" ", "") != "t,e_plus,e_minus":
            raise ValueError("ledger CSV must start with 't,e_plus,e_minus'")
        v = np.array([[float(s) for s in r.split(",")] for r in rows[1:]]).reshape(-1, 3)
        nan = np.full(len(v), np.nan)
        return EnergyLedger(v[:, 0], v[:, 1], v[:, 2], nan, nan, nan)


def window_energy(handle, alpha, beta, t, tol=1e-12):
    a, b = _position(alpha, t), _position(beta, t)
    if a > b + tol * max(1.0, abs(a), abs(b)):
        raise WindowInverted(f"alpha(t)={a} > beta(t)={b} at t={t}")
    return handle.energy_split(t, a, max(a, b)), a, b


def ledger(handle, alpha_char, beta_char, times):
    """Slope energies on the moving window [alpha(t), beta(t)]."""
    times = np.asarray(times, dtype=float)
    ep, em, eu, al, be = [], [], [], [], []
    for t in times:
        es, a, b = window_energy(handle, alpha_char, beta_char, t)
        ep.append(es.e_plus)
        em.append(es.e_minus)
        eu.append(es.e_u)
        al.append(a)
        be.append(b)
    arr = np.asarray
    return EnergyLedger(times, arr(ep), arr(em), arr(eu), arr(al), arr(be), (alpha_char, beta_char))


# ---------------------------------------------------------- one-sided limits
@dataclass(frozen=True)
class OneSidedLimit:
    at: float
    side: LimitSide
    value: float
    convergence_order_estimate: float
    uncertainty: float


def approach_times(at, side, delta=1e-2, K=8):
    sgn = 1.0 if LimitSide(side) is LimitSide.RIGHT else -1.0
    return at + sgn * delta * 0.5 ** np.arange(K + 1)


def _richardson(s):
    d = s[:-1] - s[1:]
    if d[-1] == 0.0:
        return s[-1], np.inf
    if d[-2] == 0.0 or np.sign(d[-2]) != np.sign(d[-1]):
        return s[-1], 1.0
    r = float(np.clip(np.log2(abs(d[-2] / d[-1])), 0.1, 20.0))
    return s[-1] - d[-1] / (2.0**r - 1.0), r


def one_sided_limit(values, at, side, noise=None):
    """Extrapolated limit of a series sampled at at +/- 2^{-k} delta, k = 0..K.

    The order is read off the ratio of successive differences and the last
    difference is removed Richardson-style; the uncertainty is the change of
    the extrapolant when the finest sample is dropped, plus a noise floor."""
    s = np.asarray(values, dtype=float)
    if s.size < MIN_K + 1:
        raise InsufficientSamples(f"need K >= {MIN_K} (at least {MIN_K + 1} samples), got {s.size}")
    if not np.all(np.isfinite(s)):
        raise NonCauchy("series contains non-finite samples")
    scale = max(1.0, float(np.max(np.abs(s))))
    noise = 64 * np.finfo(float).eps * scale if noise is None else noise
    d = np.abs(np.diff(s))
    if np.all(d <= noise):
        return OneSidedLimit(float(at), LimitSide(side), float(s[-1]), np.inf, float(np.max(d, initial=0.0)))
    tail = d[-4:]
    # Cauchy test: the last differences must shrink, unless already at noise level
    if tail[-1] > noise and not (tail[-1] <= 0.9 * tail[0] and tail[-1] <= 0.9 * np.max(tail[:-1])):
        raise NonCauchy(f"successive differences {tail.tolist()} do not decay")
    lim, r = _richardson(s)
    prev, _ = _richardson(s[:-1])
    unc = abs(lim - prev) + NOISE_FACTOR * noise
    return OneSidedLimit(float(at), LimitSide(side), float(lim), float(r), float(unc))


def limit_of(fn, at, side, delta=1e-2, K=8, noise=None):
    ts = approach_times(at, side, delta, K)
    return one_sided_limit([fn(t) for t in ts], at, side, noise)


# ---------------------------------------------------------------- measures
@dataclass
class MeasureReport:
    kind: str
    atoms: list = field(default_factory=list)          # [(t, mass)]
    bins: list = field(default_factory=list)           # [(t0, t1, increment)]
    total_variation: float = 0.0
    details: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "kind": self.kind,
            "atoms": [{"t": float(t), "mass": float(m)} for t, m in self.atoms],
            "bins": [{"t0": float(a), "t1": float(b), "increment": float(c)} for a, b, c in self.bins],
            "total_variation": float(self.total_variation),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            d.get("kind", ""),
            [(a["t"], a["mass"]) for a in d["atoms"]],
            [(b["t0"], b["t1"], b["increment"]) for b in d["bins"]],
            float(d["total_variation"]),
        )


class MuAtoms(NamedTuple):
    plus: MeasureReport
    minus: MeasureReport


def mu_atoms(handle, phi, t_candidates, delta=1e-2, K=8, noise_factor=NOISE_FACTOR, noise=None):
    """Atoms of mu^+ (right limit minus value of int phi (u_x^+)^2) and mu^-
    (value minus left limit of int phi (u_x^-)^2) at candidate times."""
    step = _as_step(phi)
    plus, minus = MeasureReport("mu+"), MeasureReport("mu-")
    for t in t_candidates:
        t = float(t)
        handle._check(t)
        ep, em = phi_energy(handle, step, t)
        d_right = min(delta, 0.5 * (handle.t_end - t))
        if d_right > 0:
            lim = limit_of(lambda s: phi_energy(handle, step, s)[0], t, LimitSide.RIGHT, d_right, K, noise)
            mass = lim.value - ep
            plus.details.append({"t": t, "limit": lim.value, "value": ep, "uncertainty": lim.uncertainty})
            if abs(mass) > noise_factor * lim.uncertainty:
                plus.atoms.append((t, mass))
        d_left = min(delta, 0.5 * t)
        if d_left > 0:
            lim = limit_of(lambda s: phi_energy(handle, step, s)[1], t, LimitSide.LEFT, d_left, K, noise)
            mass = em - lim.value
            minus.details.append({"t": t, "limit": lim.value, "value": em, "uncertainty": lim.uncertainty})
            if abs(mass) > noise_factor * lim.uncertainty:
                minus.atoms.append((t, mass))
    plus.total_variation = float(sum(abs(m) for _, m in plus.atoms))
    minus.total_variation = float(sum(abs(m) for _, m in minus.atoms))
    return MuAtoms(plus, minus)


def nu_measure(handle, phi, sign, time_grid):
    """Binned increments of t -> int phi (u_x^{sign})^2 over the grid cells."""
    ts = np.asarray(time_grid, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) <= 0):
        raise ValueError("time grid must be increasing with at least two points")
    which = {"+": 0, "plus": 0, 1: 0, "-": 1, "minus": 1, -1: 1}[sign]
    step = _as_step(phi)
    F = np.array([phi_energy(handle, step, t)[which] for t in ts])
    inc = np.diff(F)
    rep = MeasureReport("nu+" if which == 0 else "nu-")
    rep.bins = [(float(a), float(b), float(c)) for a, b, c in zip(ts[:-1], ts[1:], inc)]
    rep.total_variation = float(np.sum(np.abs(inc)))
    return rep


# ------------------------------------------------------- short-time bound
def sup_u2_and_P(handle, times, n_grid=401):
    su = sp = 0.0
    for t in times:
        v = handle.view(handle._check(t))
        if isinstance(v, PeakonField):
            if v.n == 0:
                continue
            lo, hi = v.x[0] - 5.0, v.x[-1] + 5.0
            xs = np.union1d(np.linspace(lo, hi, n_grid), v.x)
        else:
            xs = v.profile.nodes
        su = max(su, handle.sup_abs(t) ** 2)
        sp = max(sp, float(np.max(v.P(xs)[:, 0])))
    return su, sp


def regime_step(V4, LC):
    """Largest dt with sqrt(LC) tan(-sqrt(LC) dt + arctan(V4/sqrt(LC))) >= V4/2, capped at 1."""
    if V4 <= 0:
        return 1.0
    if LC <= 0:
        # Riccati limit V4 / (1 + V4 dt) >= V4 / 2
        return min(1.0 / V4, 1.0)
    s = np.sqrt(LC)
    return float(min((np.arctan(V4 / s) - np.arctan(V4 / (2 * s))) / s, 1.0))


def bv_lower_bound_check(handle, alpha_char, beta_char, t1, t2, n_sup=11, C=None):
    """E+(t2) >= E+(t1) - (t2 - t1)[K (beta - alpha)(t1) + int_window u_x^2(t1)]."""
    if not t2 > t1 > 0:
        raise ValueError("need 0 < t1 < t2")
    ts = np.linspace(t1, t2, n_sup)
    su, sp = sup_u2_and_P(handle, ts)
    if C is None:
        C = handle.C if handle.C is not None else max(handle.weighted_energy(t) for t in ts)
    LC = handle.spec.L * C
    V4 = 4.0 * (su + sp)
    dt_eps = regime_step(V4, LC)
    if t2 - t1 > dt_eps:
        raise RegimeViolated(f"t2 - t1 = {t2 - t1} exceeds the admissible step {dt_eps}")
    V_tilde = max(np.sqrt(LC), V4 + su)
    K = 2.0 * V_tilde * (su + sp) * np.exp(dt_eps * V_tilde)
    e1, a1, b1 = window_energy(handle, alpha_char, beta_char, t1)
    e2, _, _ = window_energy(handle, alpha_char, beta_char, t2)
    rhs = e1.e_plus - (t2 - t1) * (K * (b1 - a1) + e1.e_slope)
    return {
        "lhs": float(e2.e_plus),
        "rhs": float(rhs),
        "holds": bool(e2.e_plus >= rhs - 1e-12 * max(1.0, abs(rhs))),
        "dt_eps": float(dt_eps),
        "K_slack": float(K),
        "V4": float(V4),
        "V_tilde": float(V_tilde),
    }


__all__ = [
    "EnergyLedger", "LimitSide", "MeasureReport", "MuAtoms", "OneSidedLimit", "StepFunction", "approach_times",
    "bv_lower_bound_check", "ledger", "limit_of", "mu_atoms", "nu_measure", "one_sided_limit", "phi_energy",
    "regime_step", "step_approximate", "sup_u2_and_P", "window_energy",
]
