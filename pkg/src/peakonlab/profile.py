"""Piecewise-linear spatial snapshots of u.

u is linear on every cell [x_i, x_{i+1}] and vanishes outside [x_0, x_n], so
u_x is a cell quantity and every integral below is evaluated cell by cell
in closed form.
"""

import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnergySplit:
    e_plus: float
    e_minus: float
    e_u: float

    @property
    def e_slope(self):
        return self.e_plus + self.e_minus

    def __add__(self, other):
        return EnergySplit(self.e_plus + other.e_plus, self.e_minus + other.e_minus, self.e_u + other.e_u)

    def swapped(self):
        """Split of -u: positive and negative slope parts exchange roles."""
        return EnergySplit(self.e_minus, self.e_plus, self.e_u)


class WaveProfile:
    """Immutable piecewise-linear profile u(x) at one instant."""

    def __init__(self, nodes, values, time_stamp=0.0):
        x = np.array(nodes, dtype=float)
        u = np.array(values, dtype=float)
        if x.ndim != 1 or x.shape != u.shape:
            raise ValueError("nodes and values must be 1-d sequences of equal length")
        if x.size < 2:
            raise ValueError("a profile needs at least two nodes")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(u)):
            raise ValueError("nodes and values must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if time_stamp < 0:
            raise ValueError("time_stamp must be >= 0")
        x.flags.writeable = False
        u.flags.writeable = False
        self._x = x
        self._u = u
        self.time_stamp = float(time_stamp)
        dx = np.diff(x)
        s = np.diff(u) / dx
        s.flags.writeable = False
        self._dx = dx
        self._s = s
        self._sweep_cache = None
        self._coef_cache = None

    @property
    def nodes(self):
        return self._x

    @property
    def values(self):
        return self._u

    @property
    def slopes(self):
        return self._s

    @property
    def n_cells(self):
        return self._s.size

    def __len__(self):
        return self._x.size

    def __repr__(self):
        return (
            f"WaveProfile(n={self._x.size}, x=[{self._x[0]:.4g}, {self._x[-1]:.4g}], "
            f"t={self.time_stamp:.6g})"
        )

    def slope(self, cell):
        if not 0 <= cell < self.n_cells:
            raise IndexError(f"cell {cell} out of range 0..{self.n_cells - 1}")
        return float(self._s[cell])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self._x, self._u, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def cell_index(self, x):
        """Index of the cell containing x (clipped to the mesh)."""
        i = np.searchsorted(self._x, x, side="right") - 1
        return np.clip(i, 0, self.n_cells - 1)

    def one_sided_slopes(self, x):
        """(left, right) slopes at x; they differ only when x is a node."""
        x = float(x)
        if x < self._x[0] or x > self._x[-1]:
            return 0.0, 0.0
        j = int(np.searchsorted(self._x, x))
        if j < self._x.size and self._x[j] == x:
            left = self._s[j - 1] if j > 0 else 0.0
            right = self._s[j] if j < self.n_cells else 0.0
            return float(left), float(right)
        s = float(self._s[j - 1])
        return s, s

    # ------------------------------------------------------------------ energy
    def _clip_cells(self, lo, hi):
        a = np.clip(self._x[:-1], lo, hi)
        b = np.clip(self._x[1:], lo, hi)
        return a, b

    def energy_split(self, window=None):
        """Exact integrals of (u_x^+)^2, (u_x^-)^2 and u^2 over a window."""
        if window is None:
            lo, hi = self._x[0], self._x[-1]
        else:
            lo, hi = (float(v) for v in window)
            if lo > hi:
                raise ValueError(f"window [{lo}, {hi}] is reversed")
        a, b = self._clip_cells(lo, hi)
        length = b - a
        sp = np.maximum(self._s, 0.0)
        sm = np.maximum(-self._s, 0.0)
        ua = self._u[:-1] + self._s * (a - self._x[:-1])
        ub = self._u[:-1] + self._s * (b - self._x[:-1])
        e_u = length * (ua * ua + ua * ub + ub * ub) / 3.0
        return EnergySplit(
            e_plus=float(np.sum(sp * sp * length)),
            e_minus=float(np.sum(sm * sm * length)),
            e_u=float(np.sum(e_u)),
        )

    def h1_energy(self):
        """int (u^2 + u_x^2) over the real line."""
        es = self.energy_split()
        return es.e_u + es.e_slope

    def weighted_energy(self, a=1.0, b=1.0):
        es = self.energy_split()
        return a * es.e_u + b * es.e_slope

    def cell_weights(self, phi_integral):
        """Per-cell integrals of a test function, given its antiderivative."""
        F = np.asarray(phi_integral(self._x), dtype=float)
        return np.diff(F)

    def phi_energy(self, phi_integral):
        """(int phi (u_x^+)^2, int phi (u_x^-)^2) for a test function given by
        its antiderivative; exact because u_x is constant on each cell."""
        w = self.cell_weights(phi_integral)
        sp = np.maximum(self._s, 0.0)
        sm = np.maximum(-self._s, 0.0)
        return float(np.sum(w * sp * sp)), float(np.sum(w * sm * sm))

    # -------------------------------------------------------------- nonlocal P
    def _source_coefficients(self):
        if self._coef_cache is None:
            self._coef_cache = self._compute_coefficients()
        return self._coef_cache

    def _compute_coefficients(self):
        # on each cell, in the local coordinate s = y - x_i:
        # u^2 + u_x^2 / 2 = c0 + c1 s + c2 s^2
        u0 = self._u[:-1]
        s = self._s
        return u0 * u0 + 0.5 * s * s, 2.0 * u0 * s, s * s

    def _sweeps(self):
        if self._sweep_cache is None:
            self._sweep_cache = self._compute_sweeps()
        return self._sweep_cache

    def _compute_sweeps(self):
        c0, c1, c2 = self._source_coefficients()
        d = self._dx
        em1 = np.expm1(-d)
        # int_0^d e^{-(d-s)} f(s) ds and int_0^d e^{-s} f(s) ds per cell
        g0 = c0 - c1 + 2.0 * c2
        left_cell = (c1 * d + c2 * d * d - 2.0 * c2 * d) - em1 * g0
        hd = c0 + c1 * d + c2 * d * d + c1 + 2.0 * c2 * d + 2.0 * c2
        right_cell = -(c1 * d + c2 * d * d + 2.0 * c2 * d) - em1 * hd
        left = _decay_sweep(self._x, left_cell)
        right = _decay_sweep(-self._x[::-1], right_cell[::-1])[::-1]
        return left, right

    def convolve_P(self, query_points):
        """Exact P = 1/2 e^{-|x|} * (u^2 + u_x^2/2) and its x-derivative.

        Returns an array of shape (m, 2) with columns (P, P_x)."""
        xq = np.atleast_1d(np.asarray(query_points, dtype=float))
        left_acc, right_acc = self._sweeps()
        c0, c1, c2 = self._source_coefficients()
        x = self._x
        left = np.empty_like(xq)
        right = np.empty_like(xq)

        below = xq < x[0]
        above = xq > x[-1]
        inside = ~(below | above)
        left[below] = 0.0
        right[below] = np.exp(-(x[0] - xq[below])) * right_acc[0]
        left[above] = np.exp(-(xq[above] - x[-1])) * left_acc[-1]
        right[above] = 0.0

        xi = xq[inside]
        i = self.cell_index(xi)
        s0 = xi - x[i]
        d = self._dx[i]
        a0, a1, a2 = c0[i], c1[i], c2[i]
        g0 = a0 - a1 + 2.0 * a2
        left_part = (a1 * s0 + a2 * s0 * s0 - 2.0 * a2 * s0) - np.expm1(-s0) * g0
        left[inside] = np.exp(-s0) * left_acc[i] + left_part
        hd = a0 + a1 * d + a2 * d * d + a1 + 2.0 * a2 * d + 2.0 * a2
        h_diff = a1 * (s0 - d) + a2 * (s0 * s0 - d * d) + 2.0 * a2 * (s0 - d)
        right_part = h_diff - np.expm1(-(d - s0)) * hd
        right[inside] = np.exp(-(d - s0)) * right_acc[i + 1] + right_part

        return np.column_stack([0.5 * (left + right), 0.5 * (right - left)])

    def hs_forcing(self, query_points):
        """1/2 int_{-inf}^x u_x^2 dy (the Hunter-Saxton right-hand side)."""
        xq = np.atleast_1d(np.asarray(query_points, dtype=float))
        cum = np.concatenate([[0.0], np.cumsum(self._s ** 2 * self._dx)])
        i = self.cell_index(np.clip(xq, self._x[0], self._x[-1]))
        part = self._s[i] ** 2 * (np.clip(xq, self._x[0], self._x[-1]) - self._x[i])
        return 0.5 * (cum[i] + part)

    # ------------------------------------------------------------- diagnostics
    def oleinik_ratio(self):
        if self.time_stamp <= 0:
            raise ValueError("the Oleinik ratio needs time_stamp > 0")
        return max(float(self._s.max()), 0.0) / (1.0 + 1.0 / self.time_stamp)

    def sup_abs(self):
        return float(np.max(np.abs(self._u)))

    # ------------------------------------------------------------- reshaping
    def with_nodes(self, extra):
        """Same interpolant with additional nodes inserted."""
        extra = np.asarray(extra, dtype=float)
        extra = extra[(extra > self._x[0]) & (extra < self._x[-1])]
        x = np.union1d(self._x, extra)
        return WaveProfile(x, self(x), self.time_stamp)

    def negated(self, time_stamp=None):
        return WaveProfile(self._x, -self._u, self.time_stamp if time_stamp is None else time_stamp)

    # ------------------------------------------------------------------ csv
    def to_csv(self):
        buf = io.StringIO()
        write_profile_block(buf, self)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        profiles = read_profile_blocks(text)
        if len(profiles) != 1:
            raise ValueError(f"expected one profile block, found {len(profiles)}")
        return profiles[0]


def _decay_sweep(x, cell, span=500.0):
    """acc[0] = 0, acc[i+1] = exp(-(x[i+1] - x[i])) acc[i] + cell[i].

    Solved blockwise as acc[i] = exp(-(x_i - x_s)) (acc[s] + cumsum exp(x_{j+1} - x_s) cell[j]);
    the cell terms are nonnegative so the running sums do not cancel."""
    n = x.size
    acc = np.zeros(n)
    start = 0
    while start < n - 1:
        end = int(np.searchsorted(x, x[start] + span, side="right")) - 1
        end = min(max(end, start + 1), n - 1)
        xr = x[start + 1:end + 1] - x[start]
        acc[start + 1:end + 1] = np.exp(-xr) * (acc[start] + np.cumsum(np.exp(xr) * cell[start:end]))
        start = end
    return acc


def h1_distance(p, q):
    """Exact H^1 distance between two piecewise-linear profiles."""
    x = np.union1d(p.nodes, q.nodes)
    diff = WaveProfile(x, p(x) - q(x))
    return float(np.sqrt(diff.h1_energy()))


def zero_profile(extent=1.0, time_stamp=0.0):
    return WaveProfile([-extent, extent], [0.0, 0.0], time_stamp)


def write_profile_block(stream, profile):
    stream.write(f"# t={float(profile.time_stamp)!r}\n")
    stream.write("x,u\n")
    for x, u in zip(profile.nodes.tolist(), profile.values.tolist()):
        stream.write(f"{x!r},{u!r}\n")


def read_profile_blocks(text):
    """Parse one or more profile CSV blocks separated by blank lines."""
    profiles = []
    t = 0.0
    xs, us = [], []
    in_block = False

    def flush():
        nonlocal xs, us, in_block
        if in_block and xs:
            profiles.append(WaveProfile(xs, us, t))
        xs, us = [], []
        in_block = False

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("t="):
                flush()
                t = float(body[2:])
            continue
        if line.replace(" ", "") == "x,u":
            in_block = True
            continue
        if not in_block:
            raise ValueError(f"data row outside a profile block: {raw!r}")
        a, b = line.split(",")
        xs.append(float(a))
        us.append(float(b))
    flush()
    return profiles


def graded_mesh(crests, lo, hi, h_max=0.02, ratio=1.2, floor=1e-9):
    """Nodes on [lo, hi] clustered geometrically toward the crests.

    Every crest is a node; offsets grow from ``floor`` by ``ratio`` until
    they reach ``h_max``, and a uniform lattice of spacing ``h_max`` fills
    the rest of the interval."""
    if hi <= lo:
        raise ValueError("empty mesh interval")
    scale = max(1.0, abs(lo), abs(hi))
    eps = np.finfo(float).eps
    floor = max(floor, 64 * eps * scale)
    base = np.arange(np.ceil(lo / h_max), np.floor(hi / h_max) + 1) * h_max
    pts = [np.array([lo, hi]), base]
    crests = np.asarray([c for c in np.atleast_1d(crests) if lo < c < hi], dtype=float)
    if crests.size:
        n_geo = int(np.ceil(np.log(h_max / floor) / np.log(ratio))) + 1
        offsets = floor * ratio ** np.arange(n_geo)
        offsets = offsets[offsets < 4 * h_max]
        cs = np.sort(crests)
        pts.append(cs)
        for c in cs:
            pts.append(c - offsets)
            pts.append(c + offsets)
    x = np.unique(np.concatenate(pts))
    x = x[(x >= lo) & (x <= hi)]
    if crests.size:
        # nodes closer to a crest than half the floor would be rounding noise
        dist = np.min(np.abs(x[:, None] - crests[None, :]), axis=1)
        x = x[(dist == 0) | (dist >= 0.5 * floor)]
    tiny = np.concatenate([[False], np.diff(x) < 8 * eps * scale])
    return x[~tiny]
