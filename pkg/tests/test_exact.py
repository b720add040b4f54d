import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakonlab.exact import (
    PeakonField,
    crest_value,
    derive_params,
    pair_state,
    pair_state_textbook,
    peakon_antipeakon_field,
    profile_at,
    single_peakon,
    single_peakon_field,
    time_reverse,
)
from peakonlab.profile import zero_profile
from tests import frozen


def test_derive_params_examples():
    pr = derive_params(2.0, math.log(0.75))
    assert pr.h0 == pytest.approx(1.0, rel=1e-15)
    assert pr.t_collision == pytest.approx(math.log(3.0), rel=1e-15)
    assert pr.t_collision == pytest.approx(frozen.T, rel=1e-15)
    near = derive_params(1.0, -1e-12)
    # h0 -> 0, but T -> 2 / p0 (finite): log((1 + r) / (1 - r)) / (p0 r) -> 2 / p0
    assert near.h0 < 1e-5
    assert near.t_collision == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(ValueError, match="derive_params"):
        derive_params(1.0, 1.0)
    with pytest.raises(ValueError, match="derive_params"):
        derive_params(0.0, -1.0)


@given(st.floats(0.1, 5.0), st.floats(-5.0, -0.01))
def test_param_invariants(p0, q0):
    pr = derive_params(p0, q0)
    assert pr.h0**2 == pytest.approx(p0**2 * (1 - math.exp(q0)), rel=1e-12)
    assert 0 < pr.h0 < p0 and pr.t_collision > 0


@given(st.floats(0.2, 4.0), st.floats(-3.0, -0.05), st.floats(0.0, 0.9))
def test_stable_and_textbook_forms_agree(p0, q0, frac):
    pr = derive_params(p0, q0)
    t = frac * pr.t_collision
    p, q = pair_state(pr, t)
    pt, qt = pair_state_textbook(pr, t)
    assert p == pytest.approx(pt, rel=1e-9)
    assert q == pytest.approx(qt, rel=1e-8, abs=1e-12)


def test_pole_at_collision(params):
    t = params.t_collision * (1 - 1e-9)
    p, _ = pair_state_textbook(params, t)
    tau = params.t_collision - t
    assert p * tau == pytest.approx(2.0, rel=1e-5)
    with pytest.raises(ValueError):
        pair_state(params, params.t_collision)


def test_crest_and_collision_profile(params):
    p0, q0 = params.p0, params.q0
    assert crest_value(params, 0.0) == pytest.approx(0.5 * p0 * (1 - math.exp(q0)), rel=1e-14)
    assert crest_value(params, 0.0) == pytest.approx(0.25, rel=1e-14)
    f = peakon_antipeakon_field(params, 0.0)
    assert f.u(q0 / 2) == pytest.approx(0.25, rel=1e-14)
    assert profile_at(params, params.t_collision).sup_abs() == 0.0
    assert peakon_antipeakon_field(params, 0.5).u(0.2) == pytest.approx(frozen.PAIR_U_02_T05, rel=1e-12)
    assert peakon_antipeakon_field(params, 0.5).u_x(0.0) == pytest.approx(frozen.PAIR_UX_0_T05, rel=1e-12)


@given(st.floats(0.0, 2.0), st.floats(-4, 4))
def test_antisymmetry(t, x):
    pr = derive_params(2.0, math.log(0.75))
    f = peakon_antipeakon_field(pr, t * pr.t_collision)
    assert f.u(-x) == pytest.approx(-f.u(x), abs=1e-14)


@given(st.floats(0.0, 2.0).filter(lambda s: abs(s - 1.0) > 1e-9))
def test_energy_conserved_across_collision(s):
    pr = derive_params(2.0, math.log(0.75))
    f = peakon_antipeakon_field(pr, s * pr.t_collision)
    assert f.h1_energy() == pytest.approx(pr.h0**2, rel=1e-9)


def test_sampled_energy_converges(params):
    for t in (0.0, 0.5, 0.9 * params.t_collision, 1.7):
        assert profile_at(params, t).h1_energy() == pytest.approx(1.0, rel=2e-4)


def test_energy_concentration_before_collision(params):
    T = params.t_collision
    for delta in (0.1, 0.5):
        em = [peakon_antipeakon_field(params, T - tau).energy_split(-delta, delta).e_minus
              for tau in (1e-2, 1e-4, 1e-6)]
        assert abs(em[-1] - params.h0**2) < abs(em[0] - params.h0**2) + 1e-15
        # integral of (u_x^-)^2 tends to H0^2; the source's 2 H0^2 is not reached
        assert em[-1] == pytest.approx(params.h0**2, rel=1e-5)
    es = peakon_antipeakon_field(params, T - 0.01).energy_split(-1, 1)
    assert es.e_minus == pytest.approx(frozen.PAIR_EMINUS_WIN_TM, rel=1e-12)
    assert es.e_plus == pytest.approx(frozen.PAIR_EPLUS_WIN_TM, rel=1e-9)


def test_sign_swap_across_collision(params):
    T = params.t_collision
    for tau in (0.3, 1e-3):
        before = peakon_antipeakon_field(params, T - tau).energy_split(-1, 1)
        after = peakon_antipeakon_field(params, T + tau).energy_split(-1, 1)
        assert after.e_plus == pytest.approx(before.e_minus, rel=1e-12)
        assert after.e_minus == pytest.approx(before.e_plus, rel=1e-12)
    after = peakon_antipeakon_field(params, T + 0.01).energy_split(-1, 1)
    assert after.e_plus == pytest.approx(frozen.PAIR_EPLUS_WIN_TP, rel=1e-12)


def test_field_P_matches_oracle(params):
    f = peakon_antipeakon_field(params, 0.0)
    P = f.P([0.0, 0.3])
    assert P[0, 0] == pytest.approx(frozen.PAIR_P_0_T0, rel=1e-12)
    assert P[1, 0] == pytest.approx(frozen.PAIR_P_03_T0, rel=1e-12)
    assert P[1, 1] == pytest.approx(frozen.PAIR_PX_03_T0, rel=1e-12)


def test_field_split_matches_sampled_profile(params):
    f = peakon_antipeakon_field(params, 0.4)
    prof = f.sample(0.4)
    a, b = f.energy_split(-0.7, 1.3), prof.energy_split((-0.7, 1.3))
    assert a.e_plus == pytest.approx(b.e_plus, rel=1e-3)
    assert a.e_minus == pytest.approx(b.e_minus, rel=1e-3)
    assert a.e_u == pytest.approx(b.e_u, rel=1e-4)


def test_single_peakon():
    p = single_peakon(1.0, 0.0)
    assert p(0.0) == 1.0 and 0.0 in p.nodes
    p2 = single_peakon(1.0, 2.0)
    assert p2.nodes[np.argmax(p2.values)] == 2.0
    assert 0.5 * p2.h1_energy() == pytest.approx(1.0, rel=1e-4)
    assert 0.5 * single_peakon_field(1.7, 0.3).h1_energy() == pytest.approx(1.7**2, rel=1e-14)


def test_time_reverse(params):
    T = params.t_collision
    traj = [profile_at(params, t) for t in np.linspace(0, T, 5)]
    back = time_reverse(time_reverse(traj, T), T)
    for a, b in zip(traj, back):
        assert a.time_stamp == pytest.approx(b.time_stamp)
        assert np.array_equal(a.values, b.values)
    rev = time_reverse(traj, T)
    # -u(T - t) is the prolongation branch at 2T - (T - t)
    for r in rev:
        ref = peakon_antipeakon_field(params, 2 * T - (T - r.time_stamp))
        assert np.max(np.abs(r.values - ref.u(r.nodes))) < 1e-12
    z = time_reverse([zero_profile(), zero_profile(time_stamp=1.0)], 1.0)
    assert all(p.sup_abs() == 0.0 for p in z)
    with pytest.raises(ValueError):
        time_reverse(traj, 5.0)


def test_empty_field():
    f = PeakonField([], [])
    assert f.u(1.0) == 0.0 and f.h1_energy() == 0.0 and f.sup_abs() == 0.0
