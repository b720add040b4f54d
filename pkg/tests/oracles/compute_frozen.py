"""Regenerate the frozen reference values in tests/frozen.py.

Independent of the package: the peakon-antipeakon solution is evaluated from
the textbook closed forms in 40-digit arithmetic and every integral is done
by mpmath quadrature split at the kinks.  Run as

    python tests/oracles/compute_frozen.py > tests/frozen.py
"""

import mpmath as mp

mp.mp.dps = 40

P0 = mp.mpf(2)
Q0 = mp.log(mp.mpf(3) / 4)
H0 = P0 * mp.sqrt(1 - mp.e ** Q0)
T = mp.log((P0 + H0) / (P0 - H0)) / H0


def pq(t):
    e = mp.e ** (H0 * t)
    p = H0 * ((P0 + H0) + (P0 - H0) * e) / ((P0 + H0) - (P0 - H0) * e)
    q = Q0 - 2 * mp.log(((P0 + H0) * mp.e ** (-H0 * t / 2) + (P0 - H0) * mp.e ** (H0 * t / 2)) / (2 * P0))
    return p, q


def pair(t):
    """(u, u_x) of the pair as functions of x, plus the crest positions."""
    if t > T:
        u, ux, cr = pair(2 * T - t)
        return (lambda x: -u(x)), (lambda x: -ux(x)), cr
    p, q = pq(t)
    p1, q1 = p / 2, q / 2

    def u(x):
        return p1 * mp.e ** (-abs(x - q1)) - p1 * mp.e ** (-abs(x + q1))

    def ux(x):
        return -p1 * mp.sign(x - q1) * mp.e ** (-abs(x - q1)) + p1 * mp.sign(x + q1) * mp.e ** (-abs(x + q1))

    return u, ux, sorted([q1, -q1])


def split_energy(t, lo, hi):
    u, ux, crests = pair(t)
    cuts = [lo] + [c for c in crests if lo < c < hi] + [hi]
    ep = em = eu = mp.mpf(0)
    for a, b in zip(cuts[:-1], cuts[1:]):
        eu += mp.quad(lambda x: u(x) ** 2, [a, b])
        ep += mp.quad(lambda x: max(ux(x), 0) ** 2, [a, b])
        em += mp.quad(lambda x: min(ux(x), 0) ** 2, [a, b])
    return ep, em, eu


def P_of(u, ux, kinks, x):
    f = lambda y: mp.e ** (-abs(x - y)) / 2 * (u(y) ** 2 + ux(y) ** 2 / 2)
    fx = lambda y: -mp.sign(x - y) * mp.e ** (-abs(x - y)) / 2 * (u(y) ** 2 + ux(y) ** 2 / 2)
    pts = sorted(set([-mp.inf, x, mp.inf] + list(kinks)))
    return mp.quad(f, pts), mp.quad(fx, pts)


def main():
    out = {}
    out["T"] = T
    out["H0"] = H0
    ep, em, eu = split_energy(0, -mp.inf, mp.inf)
    out["PAIR_H1_T0"] = ep + em + eu
    ep, em, eu = split_energy(0, -1, 1)
    out["PAIR_EPLUS_WIN_T0"], out["PAIR_EMINUS_WIN_T0"], out["PAIR_EU_WIN_T0"] = ep, em, eu
    ep, em, eu = split_energy(T - mp.mpf("0.01"), -1, 1)
    out["PAIR_EPLUS_WIN_TM"], out["PAIR_EMINUS_WIN_TM"] = ep, em
    ep, em, eu = split_energy(T + mp.mpf("0.01"), -1, 1)
    out["PAIR_EPLUS_WIN_TP"], out["PAIR_EMINUS_WIN_TP"] = ep, em
    u, ux, cr = pair(0)
    out["PAIR_P_0_T0"], _ = P_of(u, ux, cr, mp.mpf(0))
    out["PAIR_P_03_T0"], out["PAIR_PX_03_T0"] = P_of(u, ux, cr, mp.mpf("0.3"))
    u, ux, cr = pair(mp.mpf("0.5"))
    out["PAIR_UX_0_T05"] = ux(mp.mpf(0))
    out["PAIR_U_02_T05"] = u(mp.mpf("0.2"))
    c = mp.mpf("1.5")
    su = lambda y: c * mp.e ** (-abs(y))
    sux = lambda y: -c * mp.sign(y) * mp.e ** (-abs(y))
    out["PEAKON_P_0"], _ = P_of(su, sux, [0], mp.mpf(0))
    out["PEAKON_P_1"], out["PEAKON_PX_1"] = P_of(su, sux, [0], mp.mpf(1))
    print('"""Reference values from tests/oracles/compute_frozen.py (mpmath, 40 digits)."""')
    print()
    for k, v in out.items():
        print(f"{k} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    main()
