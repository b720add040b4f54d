"""Solution generators behind one access layer.

Every handle answers the same questions at a time t: the profile, point
values and one-sided slopes, the forcing int A(x,y)[a u^2 + b u_x^2] dy that
drives u along characteristics, P, and windowed slope energies.  Peakon
sources answer analytically; file sources interpolate sampled profiles.
"""

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from peakonlab.errors import CollisionImminent, OutOfSpan
from peakonlab.exact import (
    DEFAULT_MESH,
    ZERO_FIELD,
    PeakonField,
    derive_params,
    peakon_antipeakon_field,
)
from peakonlab.kernel import CAMASSA_HOLM, KernelSpec
from peakonlab.profile import WaveProfile, read_profile_blocks, write_profile_block

RTOL = 1e-10
ATOL = 1e-12
GAP_FLOOR = 1e-6
# field views keep a colliding pair at least this far (in time) from the collision;
# closer in, the momenta (about 2/tau) cancel catastrophically in P
FIELD_TAU = 2e-4
SPAN_TOL = 1e-12


class SourceKind(str, Enum):
    EXACT = "ExactPeakonAntipeakon"
    MULTIPEAKON = "Multipeakon"
    REVERSED = "Reversed"
    FROM_FILE = "FromFile"


# ------------------------------------------------------------------ peakon ODE
@dataclass(frozen=True)
class MultipeakonState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        if q.size < 1 or q.shape != p.shape:
            raise ValueError("need N >= 1 positions and as many momenta")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self):
        return self.q.size

    def min_gap(self):
        if self.n < 2:
            return np.inf
        d = np.abs(self.q[:, None] - self.q[None, :])
        d[np.diag_indices(self.n)] = np.inf
        return float(d.min())

    def field(self):
        return PeakonField(self.q, self.p)

    def hamiltonian(self):
        G = np.exp(-np.abs(self.q[:, None] - self.q[None, :]))
        return 0.5 * float(self.p @ G @ self.p)


def peakon_rhs(q, p):
    d = q[:, None] - q[None, :]
    E = np.exp(-np.abs(d))
    qdot = E @ p
    pdot = p * ((np.sign(d) * E) @ p)
    return qdot, pdot


def _rhs(t, y):
    n = y.size // 2
    qd, pd = peakon_rhs(y[:n], y[n:])
    return np.concatenate([qd, pd])


def _closest_pair(q):
    d = np.abs(q[:, None] - q[None, :])
    d[np.diag_indices(q.size)] = np.inf
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return (int(min(i, j)), int(max(i, j))), float(d[i, j])


def multipeakon_step(state, dt, rtol=RTOL, atol=ATOL, gap_floor=GAP_FLOOR):
    """Advance by dt with an adaptive embedded Runge-Kutta pair (DOP853)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    pair, gap = _closest_pair(state.q) if state.n >= 2 else (None, np.inf)
    if gap < gap_floor:
        raise CollisionImminent(f"peakons {pair} are {gap:.3e} apart", pair=pair, gap=gap)
    events = _gap_events(state.n, gap_floor)
    sol = solve_ivp(
        _rhs, (state.t, state.t + dt), np.concatenate([state.q, state.p]),
        method="DOP853", rtol=rtol, atol=atol, events=events,
    )
    if not sol.success:
        raise FloatingPointError(f"peakon integration failed: {sol.message}")
    if sol.status == 1:
        y = sol.y[:, -1]
        pair, gap = _closest_pair(y[: state.n])
        raise CollisionImminent(f"peakons {pair} reach the gap floor inside the step", pair=pair, gap=gap)
    y = sol.y[:, -1]
    return MultipeakonState(y[: state.n], y[state.n:], state.t + dt)


def _gap_events(n, gap_floor):
    if n < 2:
        return None

    def gap(t, y):
        q = np.sort(y[:n])
        return float(np.min(np.diff(q))) - gap_floor

    gap.terminal = True
    gap.direction = -1
    return [gap]


def _energy_prel(q, base, k, guess, energy):
    """Relative momentum s of the pair (k, k+1) with p = base + s (e_k - e_{k+1}) / 2
    such that p G p equals energy; the root of the guess's sign closest to it.

    The two-peakon formula alone conserves energy only for a pair of zero total
    momentum far from other peakons; the energy fixes the remaining freedom."""
    G = np.exp(-np.abs(q[:, None] - q[None, :]))
    # G[k] - G[k+1] via expm1: the gap is far below the positions' own rounding
    dG = 0.5 * (G[k] - G[k + 1])
    dG[k] = -0.5 * np.expm1(-(q[k + 1] - q[k]))
    dG[k + 1] = -dG[k]
    a, b, c = dG[k], 2.0 * (dG @ base), base @ G @ base - energy
    disc = b * b - 4 * a * c
    if not (a > 0 and disc >= 0):
        return guess
    roots = (-b + np.array([1.0, -1.0]) * np.sqrt(disc)) / (2 * a)
    roots = roots[np.sign(roots) == np.sign(guess)]
    return float(roots[np.argmin(np.abs(roots - guess))]) if roots.size else guess


def pair_collision_time(m_left, m_right, gap):
    """Remaining time until a left/right peakon pair at distance gap meets.

    With p = m_left - m_right and q = -gap the pair obeys
    H^2 = p^2 (1 - e^q) and collides after (2/H) artanh(H/p)."""
    p = m_left - m_right
    if p <= 0:
        return np.inf, 0.0
    H = p * np.sqrt(-np.expm1(-gap))
    return float(2.0 / H * np.arctanh(H / p)), float(H)


# ---------------------------------------------------------------- handles
class _ProfileView:
    """Adapter giving a WaveProfile the PeakonField evaluation interface."""

    def __init__(self, profile):
        self.profile = profile

    def u(self, x):
        return self.profile(x)

    def slopes(self, x):
        return self.profile.one_sided_slopes(x)

    def P(self, x):
        return self.profile.convolve_P(x)

    def energy_split(self, lo=-np.inf, hi=np.inf):
        if lo > hi:
            raise ValueError(f"window [{lo}, {hi}] is reversed")
        x = self.profile.nodes
        lo, hi = max(lo, x[0]), min(hi, x[-1])
        return self.profile.energy_split((lo, max(lo, hi)))

    def hs_forcing(self, x):
        return self.profile.hs_forcing(x)

    def sup_abs(self):
        return self.profile.sup_abs()


class SolutionHandle:
    """Common interface of every solution generator on a span [0, t_end]."""

    source = None
    trace_tol = None

    def __init__(self, t_end, spec=CAMASSA_HOLM):
        if not t_end >= 0:
            raise ValueError("t_end must be >= 0")
        self.t_end = float(t_end)
        self.spec = spec
        self.C = None

    # subclasses provide view(t) returning a PeakonField or _ProfileView
    def view(self, t):
        raise NotImplementedError

    def breakpoints(self):
        """Times where the field is not smooth in t; tracers stop there."""
        return np.array([])

    def _check(self, t):
        if t < -SPAN_TOL or t > self.t_end + SPAN_TOL:
            raise OutOfSpan(f"t={t} outside span [0, {self.t_end}]")
        return min(max(float(t), 0.0), self.t_end)

    def field_at(self, t):
        v = self.view(self._check(t))
        return v if isinstance(v, PeakonField) else None

    def profile_at(self, t, mesh=DEFAULT_MESH):
        t = self._check(t)
        v = self.view(t)
        if isinstance(v, PeakonField):
            if v.n == 0:
                return WaveProfile([-mesh.min_extent, mesh.min_extent], [0.0, 0.0], t)
            return v.sample(t, mesh)
        return WaveProfile(v.profile.nodes, v.profile.values, t)

    def u(self, t, x):
        return self.view(self._check(t)).u(x)

    def slopes(self, t, x):
        return self.view(self._check(t)).slopes(x)

    def P(self, t, x):
        return self.view(self._check(t)).P(x)

    def forcing(self, t, x):
        """int A(x, y)[a u^2 + b u_x^2] dy, the rate of change of u along
        a characteristic through x."""
        v = self.view(self._check(t))
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        if self.spec.is_ch:
            return -v.P(xq)[:, 1]
        if isinstance(v, PeakonField):
            return np.array([self.spec.b * v.energy_split(-np.inf, xi).e_slope for xi in xq])
        return 2.0 * self.spec.b * v.hs_forcing(xq)

    def energy_split(self, t, lo=-np.inf, hi=np.inf):
        return self.view(self._check(t)).energy_split(lo, hi)

    def weighted_energy(self, t):
        es = self.energy_split(t)
        return self.spec.a * es.e_u + self.spec.b * es.e_slope

    def sup_abs(self, t):
        return self.view(self._check(t)).sup_abs()


class ExactPeakonAntipeakon(SolutionHandle):
    source = SourceKind.EXACT

    def __init__(self, p0=2.0, q0=np.log(0.75), t_end=None):
        self.params = derive_params(p0, q0)
        super().__init__(2 * self.params.t_collision if t_end is None else t_end)

    def view(self, t):
        return peakon_antipeakon_field(self.params, t)


@dataclass
class _Segment:
    t0: float
    t1: float
    kind: str            # "ode" or "window"
    sol: object = None   # dense output of the ODE (others merged during windows)
    n: int = 0
    pair: tuple = None
    merged: int = -1     # index of the merged pair peakon inside a window system
    h: float = 0.0
    t_c: float = 0.0
    mass: float = 0.0
    energy: float = 0.0  # 2H on entry; the window states are held to it


class Multipeakon(SolutionHandle):
    """N-peakon trajectory with conservative continuation through collisions.

    Away from collisions the ODEs are integrated with dense output.  When two
    neighbouring crests come within gap_floor, the pair follows the exact
    two-peakon formula through the collision (momenta swap sign, positions
    are mirrored), while the remaining peakons feel the pair as one peakon
    of the combined momentum at its centre."""

    source = SourceKind.MULTIPEAKON

    def __init__(self, q, p, t_end, rtol=RTOL, atol=ATOL, gap_floor=GAP_FLOOR, max_collisions=1000):
        super().__init__(t_end)
        q = np.atleast_1d(np.asarray(q, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        self.initial = MultipeakonState(q, p, 0.0) if q.size else None
        self.rtol, self.atol, self.gap_floor = rtol, atol, gap_floor
        self.segments = []
        self.collisions = []
        if q.size:
            self._integrate(max_collisions)

    # -------------------------------------------------------------- building
    def _integrate(self, max_collisions):
        order = np.argsort(self.initial.q, kind="stable")
        q, p, t = self.initial.q[order], self.initial.p[order], 0.0
        n = q.size
        if n >= 2 and np.min(np.diff(q)) < self.gap_floor:
            raise CollisionImminent("initial crests closer than the gap floor", gap=float(np.min(np.diff(q))))
        while t < self.t_end:
            sol = solve_ivp(
                _rhs, (t, self.t_end), np.concatenate([q, p]), method="DOP853",
                rtol=self.rtol, atol=self.atol, dense_output=True, events=_gap_events(n, self.gap_floor),
            )
            if not sol.success:
                raise FloatingPointError(f"peakon integration failed: {sol.message}")
            t_stop = float(sol.t[-1])
            self.segments.append(_Segment(t, t_stop, "ode", sol=sol.sol, n=n))
            if sol.status != 1:
                break
            if len(self.collisions) >= max_collisions:
                raise FloatingPointError("too many collisions")
            y = sol.y[:, -1]
            q, p = y[:n], y[n:]
            t = t_stop
            q, p, t = self._cross(q, p, t)

    def _cross(self, q, p, t):
        n = q.size
        k = int(np.argmin(np.diff(q)))
        i, j = k, k + 1
        gap = q[j] - q[i]
        t_rem, H = pair_collision_time(p[i], p[j], gap)
        if not np.isfinite(t_rem):
            raise FloatingPointError("crests approach without a collision")
        mass = p[i] + p[j]
        centre = 0.5 * (q[i] + q[j])
        t_exit = t + 2.0 * t_rem
        # the others see the pair as one peakon of the combined momentum
        rq = np.concatenate([q[:i], [centre], q[j + 1:]])
        rp = np.concatenate([p[:i], [mass], p[j + 1:]])
        t1 = min(t_exit, self.t_end)
        sol = solve_ivp(_rhs, (t, max(t1, t + 1e-300)), np.concatenate([rq, rp]), method="DOP853",
                        rtol=self.rtol, atol=self.atol, dense_output=True)
        seg = _Segment(t, t1, "window", sol=sol.sol, n=n - 1, pair=(i, j), merged=i,
                       h=H, t_c=t + t_rem, mass=mass, energy=float(p @ np.exp(-np.abs(q[:, None] - q[None, :])) @ p))
        self.segments.append(seg)
        self.collisions.append((t + t_rem, (i, j)))
        if t_exit >= self.t_end:
            return q, p, self.t_end
        qq, pp = self._window_state(seg, t_exit)
        return qq, pp, t_exit

    def _window_state(self, seg, t, tau_floor=0.0):
        y = seg.sol(t)
        rq, rp = y[: seg.n], y[seg.n:]
        c = rq[seg.merged]
        tau = seg.t_c - t
        if abs(tau) < tau_floor:
            tau = tau_floor if tau >= 0 else -tau_floor
        z = 0.5 * seg.h * abs(tau)
        if z == 0.0:
            gap, prel = 0.0, 0.0
        else:
            gap = 2.0 * np.log1p(2.0 * np.sinh(0.5 * z) ** 2) if z < 1 else 2.0 * (z + np.log1p(np.exp(-2 * z)) - np.log(2.0))
            prel = seg.h / np.tanh(z) * np.sign(tau)
        q = np.concatenate([rq[: seg.merged], [c - gap / 2, c + gap / 2], rq[seg.merged + 1:]])
        p = np.concatenate([rp[: seg.merged], [0.5 * rp[seg.merged]] * 2, rp[seg.merged + 1:]])
        if gap > 0:
            prel = _energy_prel(q, p, seg.merged, prel, seg.energy)
        p[seg.merged] += 0.5 * prel
        p[seg.merged + 1] -= 0.5 * prel
        return q, p

    # ------------------------------------------------------------- access
    def state_at(self, t):
        t = self._check(t)
        if self.initial is None:
            return None
        for seg in self.segments:
            if seg.t0 <= t <= seg.t1:
                if seg.kind == "ode":
                    y = seg.sol(t)
                    return MultipeakonState(y[: seg.n], y[seg.n:], t)
                q, p = self._window_state(seg, t)
                return MultipeakonState(q, p, t)
        raise OutOfSpan(f"t={t} not covered by the integrated segments")

    def breakpoints(self):
        w = [(s.t0, s.t_c, s.t1) for s in self.segments if s.kind == "window"]
        return np.unique(np.clip(np.ravel(w), 0.0, self.t_end)) if w else np.array([])

    def view(self, t):
        st = self.state_at(t)
        if st is None:
            return ZERO_FIELD
        keep = st.p != 0.0
        seg = self._window_at(st.t)
        if seg is not None and abs(seg.t_c - st.t) < FIELD_TAU:
            q, p = self._window_state(seg, st.t, FIELD_TAU)
            return _CollisionField(st.q[keep], st.p[keep], PeakonField(q, p))
        return PeakonField(st.q[keep], st.p[keep])

    def _window_at(self, t):
        for seg in self.segments:
            if seg.t0 <= t <= seg.t1:
                return seg if seg.kind == "window" else None
        return None


class _CollisionField(PeakonField):
    """The field at (or next to) a collision, with P taken from the pair held
    FIELD_TAU away, where the energy concentrating at the collision point is
    still resolved.  The energies stay those of the field itself: at the
    collision instant the concentrated part is an atom of mu, in neither E+
    nor E-."""

    def __init__(self, positions, momenta, near):
        super().__init__(positions, momenta)
        self.near = near

    def negated(self):
        return _CollisionField(self.x, -self.m, self.near.negated())

    def P(self, x):
        return self.near.P(x)


class Reversed(SolutionHandle):
    """-u(T - t, x) on [0, T]; forward solutions become backward ones."""

    source = SourceKind.REVERSED

    def __init__(self, base, T):
        if T < 0 or T > base.t_end + SPAN_TOL:
            raise OutOfSpan(f"T={T} outside span [0, {base.t_end}]")
        super().__init__(T, base.spec)
        self.base = base

    def breakpoints(self):
        b = self.t_end - np.asarray(self.base.breakpoints(), dtype=float)
        return np.sort(b[(b >= 0.0) & (b <= self.t_end)])

    def view(self, t):
        v = self.base.view(self.t_end - t)
        if isinstance(v, PeakonField):
            return v.negated()
        return _ProfileView(v.profile.negated(time_stamp=t))


class FromFile(SolutionHandle):
    """Snapshots read from a trajectory file, linear in time between them."""

    source = SourceKind.FROM_FILE
    # snapshot data carry mesh-level errors; tracing tighter than this only buys rejected steps
    trace_tol = (1e-8, 1e-10)

    def __init__(self, profiles, t_end=None, spec=CAMASSA_HOLM):
        profiles = sorted(profiles, key=lambda pr: pr.time_stamp)
        if not profiles:
            raise ValueError("a trajectory needs at least one profile")
        self.profiles = profiles
        self.times = np.array([pr.time_stamp for pr in profiles])
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        super().__init__(self.times[-1] if t_end is None else t_end, spec)
        self._cache = {}

    def breakpoints(self):
        return self.times

    def _snapshot(self, k):
        if k not in self._cache:
            self._cache[k] = _ProfileView(self.profiles[k])
        return self._cache[k]

    def view(self, t):
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.profiles) - 1)
        if k + 1 >= len(self.profiles) or t <= self.times[k]:
            return self._snapshot(k)
        lam = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return _BlendView(self._snapshot(k), self._snapshot(k + 1), lam, t)


class _BlendView:
    """Linear blend in time of two snapshot views.

    u and its slopes are those of the blended profile; P and the HS forcing are
    blended from the snapshots instead of recomputed, which keeps pointwise
    queries (characteristic right-hand sides) cheap."""

    def __init__(self, a, b, lam, t):
        self.a, self.b, self.lam, self.t = a, b, float(lam), float(t)
        self._profile = None

    def _mix(self, fa, fb):
        return (1.0 - self.lam) * fa + self.lam * fb

    @property
    def profile(self):
        if self._profile is None:
            pa, pb = self.a.profile, self.b.profile
            x = np.union1d(pa.nodes, pb.nodes)
            self._profile = WaveProfile(x, self._mix(pa(x), pb(x)), self.t)
        return self._profile

    def u(self, x):
        return self._mix(self.a.u(x), self.b.u(x))

    def slopes(self, x):
        left, right = self._mix(np.asarray(self.a.slopes(x), dtype=float), np.asarray(self.b.slopes(x), dtype=float))
        return float(left), float(right)

    def P(self, x):
        return self._mix(self.a.P(x), self.b.P(x))

    def hs_forcing(self, x):
        return self._mix(self.a.hs_forcing(x), self.b.hs_forcing(x))

    def energy_split(self, lo=-np.inf, hi=np.inf):
        return _ProfileView(self.profile).energy_split(lo, hi)

    def sup_abs(self):
        return self.profile.sup_abs()


def handle_profile_at(handle, t, mesh=DEFAULT_MESH):
    return handle.profile_at(t, mesh)


def energy_sup(handle, sample_times):
    """sup over samples of int (a u^2 + b u_x^2); stored on the handle as C."""
    times = list(sample_times)
    if not times:
        raise ValueError("energy_sup needs at least one sample time")
    C = max(handle.weighted_energy(t) for t in times)
    handle.C = float(C)
    return handle.C


def zero_handle(t_end, spec=CAMASSA_HOLM):
    return Multipeakon([], [], t_end) if spec.is_ch else FromFile(
        [WaveProfile([-1.0, 1.0], [0.0, 0.0], 0.0), WaveProfile([-1.0, 1.0], [0.0, 0.0], t_end)], spec=spec)


# --------------------------------------------------------- trajectory files
class TrajectoryError(ValueError):
    pass


def write_trajectory(stream, source, t_end, profiles):
    kind = SourceKind(source).value
    stream.write(f"# source={kind} T_end={float(t_end)!r}\n")
    for k, pr in enumerate(profiles):
        if k:
            stream.write("\n")
        write_profile_block(stream, pr)


def trajectory_text(source, t_end, profiles):
    buf = io.StringIO()
    write_trajectory(buf, source, t_end, profiles)
    return buf.getvalue()


def read_trajectory(text):
    """(source, T_end, profiles) from trajectory-file text."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# source="):
        raise TrajectoryError("missing '# source=<kind> T_end=<t>' header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        source = SourceKind(fields["source"])
        t_end = float(fields["T_end"])
        profiles = read_profile_blocks("\n".join(lines[1:]))
    except (KeyError, ValueError) as exc:
        raise TrajectoryError(f"malformed trajectory: {exc}") from exc
    if not profiles:
        raise TrajectoryError("trajectory holds no profiles")
    return source, t_end, profiles


def load_handle(text, spec=CAMASSA_HOLM):
    source, t_end, profiles = read_trajectory(text)
    try:
        return FromFile(profiles, t_end=t_end, spec=spec)
    except ValueError as exc:
        raise TrajectoryError(str(exc)) from exc


__all__ = [
    "ExactPeakonAntipeakon", "FromFile", "KernelSpec", "Multipeakon", "MultipeakonState", "Reversed",
    "SolutionHandle", "SourceKind", "TrajectoryError", "energy_sup", "handle_profile_at", "load_handle",
    "multipeakon_step", "pair_collision_time", "peakon_rhs", "read_trajectory", "trajectory_text",
    "write_trajectory", "zero_handle",
]
