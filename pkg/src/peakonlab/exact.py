"""Closed-form solutions: superpositions of peakons evaluated analytically,
the peakon-antipeakon interaction with its conservative prolongation,
single travelling peakons, and time reversal of trajectories.
"""

from dataclasses import dataclass, field

import numpy as np

from peakonlab.profile import EnergySplit, WaveProfile, graded_mesh


@dataclass(frozen=True)
class MeshSpec:
    """How a peakon field is sampled into a WaveProfile."""

    h_max: float = 0.02
    ratio: float = 1.2
    floor_rel: float = 1e-9
    tail: float = 1e-12
    min_extent: float = 1.0

    def refined(self, factor):
        return MeshSpec(self.h_max / factor, self.ratio, self.floor_rel, self.tail, self.min_extent)


DEFAULT_MESH = MeshSpec()


def _expo(z):
    # exponent arguments are nonpositive by construction; -inf maps to 0
    with np.errstate(invalid="ignore"):
        return np.exp(z)


def _dexp(A, B, w, k):
    """e^A - e^B where A - B = k w >= 0, as e^B expm1(k w) unless w is infinite."""
    with np.errstate(invalid="ignore", over="ignore"):
        finite = _expo(B) * np.expm1(k * np.where(np.isinf(w), 0.0, w))
        return np.where(np.isinf(w), _expo(A) - _expo(B), finite)


class PeakonField:
    """u(x) = sum_j m_j exp(-|x - x_j|), evaluated in closed form.

    Between consecutive crests a_k < a_{k+1} the field is
    u = L_k exp(-(y - a_k)) + R_k exp(y - a_{k+1}), and every quantity
    (slopes, P, windowed energies) is integrated exactly on those pieces.
    """

    def __init__(self, positions, momenta):
        x = np.atleast_1d(np.asarray(positions, dtype=float))
        m = np.atleast_1d(np.asarray(momenta, dtype=float))
        if x.shape != m.shape:
            raise ValueError("positions and momenta must have equal length")
        order = np.argsort(x, kind="stable")
        self.x = x[order]
        self.m = m[order]
        n = self.x.size
        # pieces k = 0..n; anchors (aL, aR) and coefficients (L, R)
        self.aL = np.concatenate([[-np.inf], self.x])
        self.aR = np.concatenate([self.x, [np.inf]])
        L = np.zeros(n + 1)
        R = np.zeros(n + 1)
        for k in range(1, n + 1):
            if k >= 2:
                # (L + m) + L expm1(-d) keeps exact cancellation of opposite momenta
                L[k] = (L[k - 1] + self.m[k - 1]) + L[k - 1] * np.expm1(-(self.x[k - 1] - self.x[k - 2]))
            else:
                L[k] = self.m[k - 1]
        for k in range(n - 1, -1, -1):
            if k + 1 < n:
                R[k] = (R[k + 1] + self.m[k]) + R[k + 1] * np.expm1(-(self.x[k + 1] - self.x[k]))
            else:
                R[k] = self.m[k]
        self.L = L
        self.R = R
        with np.errstate(invalid="ignore"):
            width = self.aR - self.aL
        self.cross = np.where(np.isfinite(width), np.exp(-np.where(np.isfinite(width), width, 0.0)), 0.0)

    @property
    def n(self):
        return self.x.size

    def negated(self):
        return PeakonField(self.x, -self.m)

    # --------------------------------------------------------------- pointwise
    def _pieces(self, x, side):
        k = np.searchsorted(self.x, x, side="right" if side > 0 else "left")
        with np.errstate(invalid="ignore"):
            gl = np.where(self.L[k] != 0.0, np.exp(-(x - self.aL[k])), 0.0)
            gr = np.where(self.R[k] != 0.0, np.exp(x - self.aR[k]), 0.0)
        return self.L[k] * gl, self.R[k] * gr

    def u(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 0:
            return np.zeros_like(x) if x.ndim else 0.0
        left, right = self._pieces(x, 1)
        out = left + right
        return out if np.ndim(out) else float(out)

    def u_x(self, x, side=1):
        """One-sided derivative; side=+1 right limit, -1 left limit."""
        x = np.asarray(x, dtype=float)
        if self.n == 0:
            return np.zeros_like(x) if x.ndim else 0.0
        left, right = self._pieces(x, side)
        out = right - left
        return out if np.ndim(out) else float(out)

    def slopes(self, x):
        return float(self.u_x(x, -1)), float(self.u_x(x, 1))

    def sup_abs(self):
        if self.n == 0:
            return 0.0
        # |u| attains its maximum at a crest
        return float(np.max(np.abs(self.u(self.x))))

    # --------------------------------------------------------------- nonlocal P
    def P(self, x):
        """Columns (P, P_x) of 1/2 e^{-|x|} * (u^2 + u_x^2/2)."""
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        left = np.zeros_like(xq)
        right = np.zeros_like(xq)
        for k in range(self.n + 1):
            L, R = self.L[k], self.R[k]
            if L == 0.0 and R == 0.0:
                continue
            aL, aR = self.aL[k], self.aR[k]
            cL2, cR2, c1 = 1.5 * L * L, 1.5 * R * R, L * R * self.cross[k]
            # part of the piece left of x is [aL, e]; each integral is e^A - e^B
            c = aL
            e = np.clip(xq, aL, aR)
            w = e - c
            if cL2:
                left += cL2 * _dexp(-(xq - c) - 2 * (c - aL), -(xq - e) - 2 * (e - aL), w, 1)
            if cR2:
                left += cR2 * _dexp(-(xq - e) + 2 * (e - aR), -(xq - c) + 2 * (c - aR), w, 3) / 3.0
            if c1:
                left += c1 * _dexp(-(xq - e), -(xq - c), w, 1)
            # part right of x is [c, aR]
            c = np.clip(xq, aL, aR)
            e = aR
            w = e - c
            if cL2:
                right += cL2 * _dexp(-(c - xq) - 2 * (c - aL), -(e - xq) - 2 * (e - aL), w, 3) / 3.0
            if cR2:
                right += cR2 * _dexp(-(e - xq) + 2 * (e - aR), -(c - xq) + 2 * (c - aR), w, 1)
            if c1:
                right += c1 * _dexp(-(c - xq), -(e - xq), w, 1)
        return np.column_stack([0.5 * (left + right), 0.5 * (right - left)])

    # ------------------------------------------------------------------ energy
    def _piece_integrals(self, k, lo, hi):
        """(int u_x^2, int u^2) over [lo, hi] inside piece k."""
        L, R, aL, aR = self.L[k], self.R[k], self.aL[k], self.aR[k]
        w = hi - lo
        # e^A - e^B written as e^B expm1(A - B); unbounded pieces keep only the decaying end
        if L == 0.0:
            gl = 0.0
        elif np.isinf(hi):
            gl = 0.5 * _expo(-2 * (lo - aL))
        else:
            gl = 0.5 * _expo(-2 * (hi - aL)) * np.expm1(2 * w)
        if R == 0.0:
            gr = 0.0
        elif np.isinf(lo):
            gr = 0.5 * _expo(2 * (hi - aR))
        else:
            gr = 0.5 * _expo(2 * (lo - aR)) * np.expm1(2 * w)
        const = 0.0 if (L == 0.0 or R == 0.0) else 2 * L * R * self.cross[k] * (hi - lo)
        base = L * L * gl + R * R * gr
        return base - const, max(base + const, 0.0)

    def _slope_sign(self, k, y):
        L, R, aL, aR = self.L[k], self.R[k], self.aL[k], self.aR[k]
        gl = np.exp(-(y - aL)) if L else 0.0
        gr = np.exp(y - aR) if R else 0.0
        return np.sign(-L * gl + R * gr)

    def energy_split(self, lo=-np.inf, hi=np.inf):
        """Exact (int (u_x^+)^2, int (u_x^-)^2, int u^2) over [lo, hi]."""
        if lo > hi:
            raise ValueError(f"window [{lo}, {hi}] is reversed")
        ep = em = eu = 0.0
        for k in range(self.n + 1):
            a = max(lo, self.aL[k])
            b = min(hi, self.aR[k])
            if not a < b:
                continue
            L, R = self.L[k], self.R[k]
            cuts = [a, b]
            if L * R > 0:
                ystar = 0.5 * (np.log(L / R) + self.aL[k] + self.aR[k])
                if a < ystar < b:
                    cuts = [a, ystar, b]
            for c, e in zip(cuts[:-1], cuts[1:]):
                sq, usq = self._piece_integrals(k, c, e)
                if np.isfinite(c) and np.isfinite(e):
                    mid = 0.5 * (c + e)
                elif np.isfinite(c):
                    mid = c + 1.0
                else:
                    mid = e - 1.0
                sgn = self._slope_sign(k, mid)
                if sgn > 0:
                    ep += sq
                elif sgn < 0:
                    em += sq
                eu += usq
        return EnergySplit(float(ep), float(em), float(eu))

    def h1_energy(self):
        """int (u^2 + u_x^2) = 2 sum_ij m_i m_j exp(-|x_i - x_j|)."""
        if self.n == 0:
            return 0.0
        # 2 (sum m)^2 + 2 m (G - 1) m avoids cancellation for nearly opposite crests
        G1 = np.expm1(-np.abs(self.x[:, None] - self.x[None, :]))
        return float(2.0 * np.sum(self.m) ** 2 + 2.0 * self.m @ G1 @ self.m)

    def phi_energy_steps(self, step):
        """(int phi (u_x^+)^2, int phi (u_x^-)^2) for a step function phi."""
        ep = em = 0.0
        for a, b, c in step.pieces():
            if c == 0.0:
                continue
            es = self.energy_split(a, b)
            ep += c * es.e_plus
            em += c * es.e_minus
        return ep, em

    # -------------------------------------------------------------- sampling
    def extent(self, mesh=DEFAULT_MESH):
        total = float(np.sum(np.abs(self.m)))
        pad = np.log(max(total, mesh.tail) / mesh.tail) + 1.0
        if self.n == 0:
            return -mesh.min_extent, mesh.min_extent
        return float(self.x[0] - pad), float(self.x[-1] + pad)

    def sample(self, t=0.0, mesh=DEFAULT_MESH, lo=None, hi=None):
        elo, ehi = self.extent(mesh)
        lo = elo if lo is None else lo
        hi = ehi if hi is None else hi
        if self.n >= 2:
            gap = float(np.min(np.diff(self.x)))
            floor = mesh.floor_rel * max(gap, 1e-300)
        else:
            floor = mesh.floor_rel
        nodes = graded_mesh(self.x, lo, hi, mesh.h_max, mesh.ratio, floor)
        return WaveProfile(nodes, self.u(nodes), t)


ZERO_FIELD = PeakonField([], [])


# ---------------------------------------------------------------- two peakons
@dataclass(frozen=True)
class PeakonAntipeakonParams:
    p0: float
    q0: float
    h0: float = field(init=False)
    t_collision: float = field(init=False)

    def __post_init__(self):
        if not self.p0 > 0:
            raise ValueError(f"derive_params needs p0 > 0, got p0={self.p0}")
        if not self.q0 < 0:
            raise ValueError(f"derive_params needs q0 < 0, got q0={self.q0}")
        h0 = self.p0 * np.sqrt(-np.expm1(self.q0))
        object.__setattr__(self, "h0", float(h0))
        object.__setattr__(self, "t_collision", float(np.log((self.p0 + h0) / (self.p0 - h0)) / h0))


def derive_params(p0, q0):
    return PeakonAntipeakonParams(float(p0), float(q0))


def _log_cosh(z):
    z = np.abs(z)
    if z < 1.0:
        return np.log1p(2.0 * np.sinh(0.5 * z) ** 2)
    return z + np.log1p(np.exp(-2 * z)) - np.log(2.0)


def pair_state(params, t):
    """(p(t), q(t)) before the collision, written in terms of T - t.

    p = H0 coth(H0 (T-t)/2) and q = -2 log cosh(H0 (T-t)/2), algebraically
    equal to the textbook closed forms but free of cancellation near T."""
    tau = params.t_collision - t
    if tau <= 0:
        raise ValueError("pair_state is defined for t < t_collision")
    z = 0.5 * params.h0 * tau
    return float(params.h0 / np.tanh(z)), float(-2.0 * _log_cosh(z))


def pair_state_textbook(params, t):
    """The same (p(t), q(t)) evaluated from the unsimplified closed forms."""
    p0, h0 = params.p0, params.h0
    e = np.exp(h0 * t)
    p = h0 * ((p0 + h0) + (p0 - h0) * e) / ((p0 + h0) - (p0 - h0) * e)
    q = params.q0 - 2.0 * np.log(((p0 + h0) * np.exp(-h0 * t / 2) + (p0 - h0) * np.exp(h0 * t / 2)) / (2 * p0))
    return float(p), float(q)


def peakon_antipeakon_field(params, t):
    """Field of the conservative peakon-antipeakon solution at time t."""
    T = params.t_collision
    if t == T:
        return ZERO_FIELD
    if t > T:
        return peakon_antipeakon_field(params, 2 * T - t).negated()
    p, q = pair_state(params, t)
    return PeakonField([q / 2, -q / 2], [p / 2, -p / 2])


def profile_at(params, t, mesh=DEFAULT_MESH):
    if t < 0:
        raise ValueError("t must be >= 0")
    f = peakon_antipeakon_field(params, t)
    if f.n == 0:
        return WaveProfile(np.linspace(-mesh.min_extent, mesh.min_extent, 3), np.zeros(3), t)
    return f.sample(t, mesh)


def crest_value(params, t):
    """u at the left crest x = q(t)/2 for t < T."""
    p, q = pair_state(params, t)
    return 0.5 * p * -np.expm1(q)


def single_peakon_field(c, t):
    return PeakonField([c * t], [c])


def single_peakon(c, t, mesh=DEFAULT_MESH):
    return single_peakon_field(c, t).sample(t, mesh)


# -------------------------------------------------------------- time reversal
def time_reverse(trajectory, T):
    """Profiles of -u(T - t, x) for every snapshot with time in [0, T]."""
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("empty trajectory")
    times = [p.time_stamp for p in trajectory]
    if T < min(times) - 1e-12 or T > max(times) + 1e-12:
        raise ValueError(f"T={T} outside trajectory span [{min(times)}, {max(times)}]")
    out = [p.negated(time_stamp=T - p.time_stamp) for p in trajectory if p.time_stamp <= T]
    out.sort(key=lambda p: p.time_stamp)
    return out
