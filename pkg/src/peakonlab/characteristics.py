"""Characteristics zeta'(t) = u(t, zeta), the slope v = u_x along them, pair
quantities (h, p, omega), the a priori omega bounds and the flow map M_t.

A characteristic is integrated as the pair (x, U) with x' = U and
U' = int A(x, y)[a u^2 + b u_x^2] dy, which stays well defined through
kinks where u_x jumps.
"""

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import simpson, solve_ivp

from peakonlab.errors import ArgumentOutOfRange, SlopeMismatch, VFloorViolated

RTOL = 1e-10
ATOL = 1e-12
SIDE_EPS = (1e-4, 1e-5, 1e-6)
H_FLOOR = 1e-10
V_MAX = 1e6
# slope at which a traced position is declared to enter wave breaking
BREAK_SLOPE = 1e4
SLOPE_TOL = 1e-8


class Side(str, Enum):
    LEFTMOST = "Leftmost"
    RIGHTMOST = "Rightmost"
    PLAIN = "Plain"


@dataclass
class Characteristic:
    start: float
    side: Side
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray = None
    status: str = "ok"
    agreement: float = 0.0

    @property
    def samples(self):
        vs = self.v if self.v is not None else [None] * len(self.t)
        return list(zip(self.t.tolist(), self.x.tolist(), self.u.tolist(), list(vs)))

    def at(self, t):
        """(x, u) at time t by cubic Hermite interpolation (x' = u)."""
        k = int(np.clip(np.searchsorted(self.t, t) - 1, 0, len(self.t) - 2))
        t0, t1 = self.t[k], self.t[k + 1]
        dt = t1 - t0
        s = (t - t0) / dt
        h00, h10 = 2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s
        h01, h11 = -2 * s**3 + 3 * s**2, s**3 - s**2
        x = h00 * self.x[k] + h10 * dt * self.u[k] + h01 * self.x[k + 1] + h11 * dt * self.u[k + 1]
        u = (1 - s) * self.u[k] + s * self.u[k + 1]
        return float(x), float(u)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,x,u,v\n")
        vs = self.v if self.v is not None else [None] * len(self.t)
        for t, x, u, v in zip(self.t.tolist(), self.x.tolist(), self.u.tolist(), vs):
            buf.write(f"{t!r},{x!r},{u!r},{'' if v is None else repr(float(v))}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, start=None, side=Side.PLAIN):
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].replace(" ", "") != "t,x,u,v":
            raise ValueError("characteristic CSV must start with 't,x,u,v'")
        cols = [r.split(",") for r in rows[1:]]
        t = np.array([float(c[0]) for c in cols])
        x = np.array([float(c[1]) for c in cols])
        u = np.array([float(c[2]) for c in cols])
        vraw = [c[3] for c in cols]
        v = None if all(s == "" for s in vraw) else np.array([float(s) if s else np.nan for s in vraw])
        return cls(x[0] if start is None else start, Side(side), t, x, u, v)


@dataclass
class FlowMap:
    t: float
    zeta: np.ndarray
    M: np.ndarray
    monotone: bool = True
    violations: int = 0

    def to_csv(self):
        buf = io.StringIO()
        buf.write("zeta,M_t\n")
        for z, m in zip(self.zeta.tolist(), self.M.tolist()):
            buf.write(f"{z!r},{m!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, t=0.0):
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].replace(" ", "") != "zeta,M_t":
            raise ValueError("flow-map CSV must start with 'zeta,M_t'")
        vals = np.array([[float(a) for a in r.split(",")] for r in rows[1:]]).reshape(-1, 2)
        return cls(t, vals[:, 0], vals[:, 1], bool(np.all(np.diff(vals[:, 1]) >= 0)))


@dataclass
class CharacteristicPair:
    zeta: Characteristic
    eta: Characteristic
    t: np.ndarray
    h: np.ndarray
    p: np.ndarray
    omega: np.ndarray
    pdot: np.ndarray
    status: str = "ok"

    @property
    def omega_dot(self):
        """omega' = p'/h - omega^2 with p' taken from the forcing."""
        return self.pdot / self.h - self.omega**2


# ------------------------------------------------------------------ tracing
def _forcing_and_P(handle, t, x):
    view = handle.view(handle._check(t))
    if handle.spec.is_ch:
        PP = view.P(x)
        return -PP[:, 1], PP[:, 0]
    return handle.forcing(t, x), None


def _times(t0, t1, n_samples, times):
    if times is not None:
        ts = np.asarray(times, dtype=float)
        if ts.ndim != 1 or ts.size < 2 or np.any(np.diff(ts) <= 0):
            raise ValueError("times must be increasing with at least two entries")
        return ts
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    return np.linspace(t0, t1, n_samples)


def _slope_abs(handle, t, x):
    view = handle.view(handle._check(t))
    if hasattr(view, "u_x"):
        return np.maximum(np.abs(view.u_x(x, 1)), np.abs(view.u_x(x, -1)))
    return np.array([max(abs(a), abs(b)) for a, b in (view.slopes(xi) for xi in x)])


def _integrate(handle, x0, ts, with_v=False, v0=None, rtol=None, atol=None, v_max=None):
    """Joint integration of (x, U[, v]) for many characteristics.

    A characteristic whose slope |u_x| passes v_max is entering wave
    breaking, beyond which (x, U) no longer determines its continuation; it
    is stopped there and its later samples are NaN."""
    handle._check(ts[0])
    handle._check(ts[-1])
    floor = getattr(handle, "trace_tol", None) or (RTOL, ATOL)
    rtol = floor[0] if rtol is None else rtol
    atol = floor[1] if atol is None else atol
    if v_max is None:
        v_max = V_MAX if with_v else BREAK_SLOPE
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    width = 3 if with_v else 2
    out = np.full((ts.size, width, n), np.nan)
    state = [x0, np.asarray(handle.u(ts[0], x0), dtype=float).reshape(n)]
    if with_v:
        state.append(np.asarray(v0, dtype=float).reshape(n))
    state = np.stack(state)
    active = np.arange(n)
    broke = np.full(n, np.nan)
    t_cur = float(ts[0])
    out[0] = state
    stops = np.asarray(handle.breakpoints(), dtype=float)

    while active.size:
        m = active.size

        def rhs(t, y, m=m, active=active):
            Y = y.reshape(width, m)
            F, P = _forcing_and_P(handle, min(t, handle.t_end), Y[0])
            rows = [Y[1], F]
            if with_v:
                rows.append(Y[1] ** 2 - 0.5 * Y[2] ** 2 - P)
            return np.concatenate(rows)

        def breaking(t, y, m=m):
            Y = y.reshape(width, m)
            s = np.abs(Y[2]) if with_v else _slope_abs(handle, min(t, handle.t_end), Y[0])
            return v_max - float(np.max(s))

        breaking.terminal = True
        breaking.direction = -1
        if not (ts > t_cur).any():
            break
        # stop at the handle's breakpoints (snapshots, collisions): the right-hand side is only smooth between them
        inner = stops[(stops > t_cur) & (stops < ts[-1])]
        t_stop = float(inner[0]) if inner.size else float(ts[-1])
        mask = (ts > t_cur) & (ts <= t_stop)
        t_eval = ts[mask] if t_stop in ts[mask] else np.append(ts[mask], t_stop)
        # solve_ivp controls an RMS error norm; scaling by sqrt(size) bounds every component
        k = np.sqrt(width * m)
        sol = solve_ivp(rhs, (t_cur, t_stop), state[:, active].ravel(), method="DOP853", t_eval=t_eval,
                        rtol=max(rtol / k, 1e-13), atol=atol / k, events=[breaking])
        if not sol.success:
            raise FloatingPointError(f"characteristic integration failed: {sol.message}")
        sol_t = np.asarray(sol.t)
        Yk = np.asarray(sol.y).reshape(width, m, -1)
        idx = np.nonzero(mask)[0]
        n_keep = min(idx.size, sol_t.size)
        for j, col in enumerate(active):
            out[idx[:n_keep], :, col] = Yk[:, j, :n_keep].T
        if sol.status != 1:
            state[:, active] = Yk[:, :, -1]
            t_cur = t_stop
            if t_stop >= ts[-1]:
                break
            continue
        t_cur = float(sol.t_events[0][0])
        Y = sol.y_events[0][0].reshape(width, m)
        s = np.abs(Y[2]) if with_v else _slope_abs(handle, min(t_cur, handle.t_end), Y[0])
        # points inside a collapsing interval share nearly the same slope
        gone = s >= 0.5 * v_max
        if not gone.any():
            gone = s == s.max()
        broke[active[gone]] = t_cur
        state[:, active] = Y
        active = active[~gone]
    return ts, out[:, 0], out[:, 1], out[:, 2] if with_v else None, broke


def _side_starts(start, side):
    if side is Side.PLAIN:
        return np.array([start])
    sgn = -1.0 if side is Side.LEFTMOST else 1.0
    return start + sgn * np.array(SIDE_EPS)


def _extrapolate(x):
    """Limit eps -> 0 from columns at eps = 1e-4, 1e-5, 1e-6 (linear in eps);
    returns the limit and the disagreement of the two extrapolants."""
    lim_fine = x[:, 2] + (x[:, 2] - x[:, 1]) / 9.0
    lim_coarse = x[:, 1] + (x[:, 1] - x[:, 0]) / 9.0
    return lim_fine, float(np.max(np.abs(lim_fine - lim_coarse))) if x.size else 0.0


def trace_many(handle, starts, t0=0.0, t1=None, side=Side.PLAIN, n_samples=201, times=None):
    """Characteristics from many starting points, integrated jointly."""
    side = Side(side)
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    ts = _times(t0, handle.t_end if t1 is None else t1, n_samples, times)
    k = 1 if side is Side.PLAIN else len(SIDE_EPS)
    x0 = np.concatenate([_side_starts(s, side) for s in starts])
    t, X, U, _, broke = _integrate(handle, x0, ts)
    chars = []
    for i, s in enumerate(starts):
        cols = slice(i * k, (i + 1) * k)
        tb = np.nanmin(broke[cols]) if np.any(np.isfinite(broke[cols])) else None
        status = "ok" if tb is None else f"breaking at t={float(tb)!r}"
        if k == 1:
            x, u, agree = X[:, i], U[:, i], 0.0
        else:
            x, ax = _extrapolate(X[:, cols])
            u, au = _extrapolate(U[:, cols])
            agree = max(ax, au)
        chars.append(Characteristic(float(s), side, t.copy(), x.copy(), u.copy(), status=status, agreement=agree))
    return chars


def trace(handle, start, t0=0.0, t1=None, side=Side.PLAIN, n_samples=201, times=None):
    return trace_many(handle, [start], t0, t1, side, n_samples, times)[0]


def v_along(handle, char, slope_tol=SLOPE_TOL):
    """Integrate v' = u^2 - v^2/2 - P along the characteristic."""
    if not handle.spec.is_ch:
        raise ValueError("the slope ODE is stated for Camassa-Holm handles")
    x_start = char.x[0]
    left, right = handle.slopes(char.t[0], x_start)
    if abs(left - right) > slope_tol * max(1.0, abs(left), abs(right)):
        raise SlopeMismatch(f"one-sided slopes {left} and {right} differ at x={x_start}", left, right)
    t, X, U, V, broke = _integrate(handle, [x_start], char.t, with_v=True, v0=[right])
    keep = np.isfinite(X[:, 0])
    status = "ok" if np.isnan(broke[0]) else "blowup"
    return Characteristic(char.start, char.side, t[keep], X[keep, 0], U[keep, 0], V[keep, 0], status=status,
                          agreement=char.agreement)


def pair_series(handle, zeta_start, eta_start, t0=0.0, t1=None, n_samples=201, times=None, side=Side.LEFTMOST,
                h_floor=H_FLOOR):
    if not eta_start > zeta_start:
        raise ValueError("need eta_start > zeta_start")
    z, e = trace_many(handle, [zeta_start, eta_start], t0, t1, side, n_samples, times)
    h = e.x - z.x
    p = e.u - z.u
    status = "ok"
    hit = np.nonzero(~(h > h_floor))[0]
    if hit.size:
        cut = int(hit[0])
        status = "collided" if np.isfinite(h[cut]) else "breaking"
        z = Characteristic(z.start, z.side, z.t[:cut], z.x[:cut], z.u[:cut], status=z.status, agreement=z.agreement)
        e = Characteristic(e.start, e.side, e.t[:cut], e.x[:cut], e.u[:cut], status=e.status, agreement=e.agreement)
        h, p = h[:cut], p[:cut]
    t = z.t
    pdot = np.array([np.diff(handle.forcing(ti, [zi, ei]))[0] for ti, zi, ei in zip(t, z.x, e.x)])
    omega = p / h
    return CharacteristicPair(z, e, t, h, p, omega, pdot, status)


# ------------------------------------------------------------------ bounds
def omega_lower_bound(omega0, dt, L, C):
    """Lower bound for omega(t0 + dt) from omega' >= -omega^2 - LC."""
    if dt < 0:
        raise ArgumentOutOfRange("elapsed time must be >= 0")
    LC = L * C
    if LC < 0:
        raise ArgumentOutOfRange("need L*C >= 0")
    if dt == 0:
        return float(omega0)
    if LC == 0:
        # the s -> 0 limit of the tangent formula: the Riccati solution omega0 / (1 + omega0 dt)
        den = 1.0 + omega0 * dt
        if den <= 0:
            raise ArgumentOutOfRange("bound leaves its branch (finite-time blow-up to -inf)")
        return float(omega0 / den)
    s = np.sqrt(LC)
    arg = -s * dt + np.arctan(omega0 / s)
    if not arg > -np.pi / 2:
        raise ArgumentOutOfRange(f"tangent argument {arg} left (-pi/2, pi/2)")
    return float(s * np.tan(arg))


def t_max_and_Omega(L, C, t):
    LC = L * C
    if not LC > 0:
        raise ArgumentOutOfRange("need L*C > 0")
    s = np.sqrt(LC)
    T_max = np.pi / (8 * s)
    if t < 0 or t > T_max * (1 + 1e-15):
        raise ArgumentOutOfRange(f"need 0 <= t <= T_max = {T_max}, got {t}")
    if t == 0:
        return float(T_max), -np.inf
    return float(T_max), float(s * np.tan(s * t - np.pi / 2))


def eq1_violations(pair, L, C, slack=1e-6, finite_difference=True):
    """Count samples where omega' < -omega^2 - LC - slack."""
    if len(pair.t) < 3:
        return 0
    if finite_difference:
        wdot = np.gradient(pair.omega, pair.t, edge_order=2)[1:-1]
        w = pair.omega[1:-1]
    else:
        wdot, w = pair.omega_dot, pair.omega
    return int(np.sum(wdot < -w * w - L * C - slack))


def eq2_violations(pair, L, C, slack=1e-6):
    """Count samples violating the tangent bound from every earlier sample."""
    bad = 0
    w, t = np.asarray(pair.omega, dtype=float), np.asarray(pair.t, dtype=float)
    LC = L * C
    if LC < 0:
        raise ArgumentOutOfRange("need L*C >= 0")
    s = np.sqrt(LC)
    for i in range(len(t) - 1):
        dt = t[i + 1:] - t[i]
        # vectorised omega_lower_bound; the bound leaves its branch for good once it fails
        if LC == 0:
            den = 1.0 + w[i] * dt
            valid = den > 0
            b = w[i] / np.where(valid, den, 1.0)
        else:
            arg = -s * dt + np.arctan(w[i] / s)
            valid = arg > -np.pi / 2
            b = s * np.tan(np.where(valid, arg, 0.0))
        n_ok = int(np.argmin(valid)) if not valid.all() else valid.size
        b, wj = b[:n_ok], w[i + 1:i + 1 + n_ok]
        bad += int(np.sum(wj < b - slack * np.maximum(1.0, np.abs(b))))
    return bad


# ------------------------------------------------------------------ flow map
def flow_map(handle, starts, t, t0=0.0, side=Side.LEFTMOST):
    starts = np.sort(np.asarray(starts, dtype=float))
    if t == t0:
        return FlowMap(t, starts, starts.copy())
    chars = trace_many(handle, starts, t0, t, side, times=np.array([t0, t]))
    M = np.array([c.x[-1] for c in chars])
    fin = M[np.isfinite(M)]
    d = np.diff(fin)
    viol = int(np.sum(d < -1e-9 * np.maximum(1.0, np.abs(fin[1:]))))
    return FlowMap(t, starts, M, viol == 0, viol)


def flow_map_bounds(handle, zeta, eps, t, N, t0=0.0):
    """Check eps e^{-tN} <= M_t(zeta+eps) - M_t(zeta) <= eps e^{tN}."""
    fm = flow_map(handle, [zeta, zeta + eps], t, t0)
    gap = float(fm.M[1] - fm.M[0])
    lo, hi = eps * np.exp(-(t - t0) * N), eps * np.exp((t - t0) * N)
    return {"gap": gap, "lower": lo, "upper": hi, "holds": lo * (1 - 1e-9) <= gap <= hi * (1 + 1e-9)}


def v2mprime_check(handle, char, t, eps=1e-5, v_floor=0.1, n_quad=2001):
    """Compare v^2 M' at time t with v^2(0) M'(0) exp(int 2(u^2 - P)/v)."""
    t0 = float(char.t[0])
    ts = np.linspace(t0, t, n_quad)
    vc = v_along(handle, trace(handle, char.start, t0, t, times=ts))
    if vc.status != "ok" or len(vc.t) < n_quad:
        raise VFloorViolated("the slope blew up before t")
    if np.min(np.abs(vc.v)) < v_floor:
        raise VFloorViolated(f"|v| drops to {np.min(np.abs(vc.v)):.3e} < v_floor={v_floor}")
    V1 = float(np.min(np.abs(vc.v)))
    # crude omega bound along the path keeps the difference step in the proven regime
    N = float(np.max(np.abs(vc.v)))
    h = min(eps, np.exp(-(t - t0) * N) / 10.0)
    fm = flow_map(handle, [char.start - h, char.start + h], t, t0, side=Side.PLAIN)
    Mp = (fm.M[1] - fm.M[0]) / (2 * h)
    lhs = vc.v[-1] ** 2 * Mp
    P = np.array([handle.P(s, [x])[0, 0] for s, x in zip(vc.t, vc.x)])
    g = 2.0 * (vc.u**2 - P) / vc.v
    rhs = vc.v[0] ** 2 * np.exp(simpson(g, x=vc.t))
    sup_u2 = max(float(np.max(vc.u**2)), 0.0)
    sup_u2 = max(sup_u2, max(handle.sup_abs(s) ** 2 for s in vc.t[:: max(1, n_quad // 50)]))
    sup_P = float(np.max(P))
    expo = 2 * (t - t0) / V1 * (sup_u2 + sup_P)
    ratio = lhs / vc.v[0] ** 2
    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "rel_err": float(abs(lhs - rhs) / abs(rhs)),
        "M_prime": float(Mp),
        "bigN_lower": float(np.exp(-expo)),
        "bigN_upper": float(np.exp(expo)),
        "bigN_holds": bool(np.exp(-expo) <= ratio <= np.exp(expo)),
    }


def uniqueness_diagnostic(handle, zeta, N, t, K=4, t0=0.0, n_samples=101, tol=1e-9):
    """Approximate membership of zeta in the set where nearby omega stays in [-N, N]."""
    if t <= t0:
        return True
    scale = 1.0 / max(N, 1.0)
    for k in range(1, K + 1):
        d = scale / k
        for a, b in ((zeta, zeta + d), (zeta - d, zeta)):
            pr = pair_series(handle, a, b, t0, t, n_samples=n_samples)
            if pr.status != "ok" or np.any(np.abs(pr.omega) > N + tol * max(1.0, N)):
                return False
    return True


__all__ = [
    "Characteristic", "CharacteristicPair", "FlowMap", "Side", "eq1_violations", "eq2_violations", "flow_map",
    "flow_map_bounds", "omega_lower_bound", "pair_series", "t_max_and_Omega", "trace", "trace_many",
    "uniqueness_diagnostic", "v2mprime_check", "v_along",
]
