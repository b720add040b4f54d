import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakonlab.errors import CollisionImminent, OutOfSpan
from peakonlab.exact import DEFAULT_MESH, pair_state, peakon_antipeakon_field
from peakonlab.kernel import HUNTER_SAXTON
from peakonlab.profile import WaveProfile, h1_distance
from peakonlab.solver import (
    FromFile,
    Multipeakon,
    MultipeakonState,
    Reversed,
    SourceKind,
    TrajectoryError,
    energy_sup,
    handle_profile_at,
    load_handle,
    multipeakon_step,
    pair_collision_time,
    peakon_rhs,
    read_trajectory,
    trajectory_text,
    zero_handle,
)
from tests import frozen


def test_single_peakon_moves_at_its_height():
    st0 = MultipeakonState([0.0], [1.0])
    st1 = multipeakon_step(st0, 1.5)
    assert st1.q[0] == pytest.approx(1.5, abs=1e-12)
    assert st1.p[0] == 1.0
    assert st1.t == 1.5


def test_state_validation():
    with pytest.raises(ValueError):
        MultipeakonState([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        MultipeakonState([0.0], [1.0], t=-1.0)
    with pytest.raises(ValueError):
        multipeakon_step(MultipeakonState([0.0], [1.0]), 0.0)


def test_rhs_by_hand():
    q = np.array([-1.0, 0.5])
    p = np.array([2.0, -0.5])
    qd, pd = peakon_rhs(q, p)
    e = np.exp(-1.5)
    assert qd == pytest.approx([2.0 - 0.5 * e, 2.0 * e - 0.5])
    # dp_i/dt = p_i sum_j sgn(q_i - q_j) e^{-|q_i - q_j|} p_j
    assert pd == pytest.approx([2.0 * (-e * -0.5), -0.5 * (e * 2.0)])


def test_pair_matches_closed_form(params, pair_ode):
    T = params.t_collision
    for t in np.linspace(0.0, 0.9 * T, 12):
        p, q = pair_state(params, t)
        st = pair_ode.state_at(t)
        assert st.q == pytest.approx([q / 2, -q / 2], abs=1e-6)
        assert st.p == pytest.approx([p / 2, -p / 2], rel=1e-6)


def test_pair_continues_through_collision(params, pair_ode, pair_handle):
    T = params.t_collision
    assert len(pair_ode.collisions) == 1
    assert pair_ode.collisions[0][0] == pytest.approx(T, abs=1e-8)
    x = np.linspace(-3, 3, 301)
    for t in (T - 0.3, T + 0.1, T + 0.5, 1.9 * T):
        assert pair_ode.u(t, x) == pytest.approx(pair_handle.u(t, x), abs=1e-5)


def test_antisymmetry_is_preserved(pair_ode):
    x = np.linspace(-2, 2, 81)
    for t in np.linspace(0, pair_ode.t_end, 9):
        assert pair_ode.u(t, x) == pytest.approx(-pair_ode.u(t, -x), abs=1e-9)


def test_same_sign_peakons_do_not_collide():
    h = Multipeakon([-3.0, 0.0], [2.0, 1.0], 4.0)
    assert h.collisions == []
    H0 = h.state_at(0.0).hamiltonian()
    for t in np.linspace(0, 4, 9):
        st = h.state_at(t)
        assert st.hamiltonian() == pytest.approx(H0, rel=1e-8)
        assert st.p.sum() == pytest.approx(3.0, rel=1e-9)
        assert np.all(np.diff(st.q) > 0)
    # the faster peakon hands its momentum over to the slower one ahead of it
    assert h.state_at(4.0).p[1] > h.state_at(4.0).p[0]


@given(st.lists(st.floats(0.1, 2.0), min_size=1, max_size=4), st.floats(0.5, 2.0))
def test_positive_peakons_conserve_integrals(momenta, spacing):
    q = spacing * np.arange(len(momenta))
    h = Multipeakon(q, momenta, 1.0)
    a, b = h.state_at(0.0), h.state_at(1.0)
    assert b.hamiltonian() == pytest.approx(a.hamiltonian(), rel=1e-8)
    assert b.p.sum() == pytest.approx(a.p.sum(), rel=1e-9)


def test_collision_imminent():
    st0 = MultipeakonState([0.0, 1e-7], [1.0, -1.0])
    with pytest.raises(CollisionImminent) as info:
        multipeakon_step(st0, 0.1)
    assert info.value.pair == (0, 1)
    # the pair collides within the step
    with pytest.raises(CollisionImminent):
        multipeakon_step(MultipeakonState([-0.1, 0.1], [2.0, -2.0]), 1.0)
    with pytest.raises(CollisionImminent):
        Multipeakon([0.0, 1e-8], [1.0, -1.0], 1.0)


def test_pair_collision_time(params):
    t_rem, H = pair_collision_time(1.0, -1.0, -params.q0)
    assert t_rem == pytest.approx(params.t_collision, rel=1e-12)
    assert H == pytest.approx(params.h0, rel=1e-12)
    assert pair_collision_time(1.0, 2.0, 1.0)[0] == np.inf


THREE = ([-2.0, 0.0, 1.5], [1.0, 0.5, -1.2], 3.0)


def test_collision_window_of_a_massive_pair():
    # a colliding pair with nonzero total momentum next to a third peakon
    h = Multipeakon(*THREE)
    fine = Multipeakon(*THREE, gap_floor=1e-9)
    for (a, _), (b, _) in zip(h.collisions, fine.collisions):
        assert a == pytest.approx(b, abs=1e-6)
    seg = next(s for s in h.segments if s.kind == "window")
    e0 = h.field_at(0.0).h1_energy()
    for t in np.linspace(seg.t0, seg.t1, 8):
        assert h.u(t, 0.07) == pytest.approx(fine.u(t, 0.07), abs=1e-6)
        assert h.field_at(t).h1_energy() == pytest.approx(e0, rel=1e-8)
    # at the instant itself the pair's energy sits in an atom, outside the field
    assert h.field_at(seg.t_c).h1_energy() < 0.5 * e0
    # P stays continuous through the collision instant, where the field alone has lost the pair's energy
    F = [h.forcing(seg.t_c + d, np.array([0.07]))[0] for d in (-1e-3, -1e-9, 0.0, 1e-9, 1e-3)]
    assert np.ptp(F) < 1e-3
    assert np.all(np.isin([seg.t0, seg.t_c, seg.t1], h.breakpoints()))
    assert Reversed(h, 3.0).breakpoints() == pytest.approx(np.sort(3.0 - h.breakpoints()))


def test_out_of_span(pair_handle, zero):
    with pytest.raises(OutOfSpan):
        pair_handle.u(pair_handle.t_end + 1.0, 0.0)
    with pytest.raises(OutOfSpan):
        zero.profile_at(-0.5)
    with pytest.raises(OutOfSpan):
        Reversed(zero, 2.0)


def test_energy_sup(pair_handle, zero, peakon_handle, params):
    T = params.t_collision
    assert energy_sup(zero, [0.0, 0.5, 1.0]) == 0.0
    assert zero.C == 0.0
    e0 = pair_handle.weighted_energy(0.0)
    times = [t for t in np.linspace(0, 2 * T, 15) if abs(t - T) > 1e-9]
    # the H^1 energy is conserved; the (1, 1/2)-weighted one is not, and peaks at t = 0
    for t in times:
        es = pair_handle.energy_split(t)
        assert es.e_u + es.e_slope == pytest.approx(frozen.PAIR_H1_T0, rel=1e-10)
        assert pair_handle.weighted_energy(t) <= e0 * (1 + 1e-12)
    assert pair_handle.weighted_energy(T - 0.01) == pytest.approx(0.5, abs=1e-3)
    assert energy_sup(pair_handle, times) == pytest.approx(e0, rel=1e-12)
    # a u^2 + b u_x^2 with a = 1, b = 1/2 against the sampled profile
    prof = pair_handle.profile_at(0.0)
    assert e0 == pytest.approx(prof.weighted_energy(1.0, 0.5), rel=1e-3)
    assert energy_sup(peakon_handle, [0.0, 1.0, 2.0]) == pytest.approx(1.5, rel=1e-12)
    with pytest.raises(ValueError):
        energy_sup(zero, [])


def test_pair_energy_matches_oracle(pair_handle):
    es = pair_handle.energy_split(0.0, -1.0, 1.0)
    assert es.e_plus == pytest.approx(frozen.PAIR_EPLUS_WIN_T0, rel=1e-10)
    assert es.e_minus == pytest.approx(frozen.PAIR_EMINUS_WIN_T0, rel=1e-10)
    whole = pair_handle.energy_split(0.0)
    assert whole.e_u + whole.e_slope == pytest.approx(frozen.PAIR_H1_T0, rel=1e-10)


def test_reversed_handle(pair_handle, params):
    T = params.t_collision
    rev = Reversed(pair_handle, 1.5 * T)
    x = np.linspace(-2, 2, 41)
    for t in (0.0, 0.3, 1.2):
        assert rev.u(t, x) == pytest.approx(-pair_handle.u(1.5 * T - t, x), abs=1e-15)
    assert rev.source is SourceKind.REVERSED


def test_profile_converges_under_refinement(pair_handle, params):
    t = 0.5 * params.t_collision
    ref = pair_handle.profile_at(t, DEFAULT_MESH.refined(32))
    dists = [h1_distance(pair_handle.profile_at(t, DEFAULT_MESH.refined(f)), ref) for f in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_handle_profile_at_zero(zero):
    prof = handle_profile_at(zero, 0.5)
    assert prof.sup_abs() == 0.0
    assert prof.time_stamp == 0.5


def test_zero_handles():
    hs = zero_handle(1.0, HUNTER_SAXTON)
    assert hs.spec is HUNTER_SAXTON
    assert np.all(hs.forcing(0.5, [-1.0, 0.0, 1.0]) == 0.0)
    ch = zero_handle(1.0)
    assert ch.u(0.3, 0.0) == 0.0
    assert ch.weighted_energy(0.7) == 0.0


def test_trajectory_round_trip_is_exact(params):
    profs = [peakon_antipeakon_field(params, t).sample(t) for t in (0.0, 0.25, 0.5)]
    text = trajectory_text("ExactPeakonAntipeakon", 0.5, profs)
    source, t_end, back = read_trajectory(text)
    assert source is SourceKind.EXACT and t_end == 0.5
    for a, b in zip(profs, back):
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.values, b.values)
        assert a.time_stamp == b.time_stamp
    h = load_handle(text)
    assert isinstance(h, FromFile)
    assert trajectory_text("ExactPeakonAntipeakon", h.t_end, h.profiles) == text


def test_file_handle_interpolates_linearly():
    a = WaveProfile([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0], 0.0)
    b = WaveProfile([-1.0, 0.0, 1.0], [0.0, 3.0, 0.0], 1.0)
    h = FromFile([a, b])
    assert h.u(0.25, 0.0) == pytest.approx(1.5)
    assert h.slopes(0.5, 0.0) == pytest.approx((2.0, -2.0))
    assert h.u(1.0, 0.0) == 3.0


@pytest.mark.parametrize("text", [
    "",
    "garbage\n",
    "# source=Nope T_end=1\n",
    "# source=FromFile T_end=1\n",
    "# source=FromFile\n# t=0\nx,u\n0,0\n1,0\n",
])
def test_trajectory_errors(text):
    with pytest.raises(TrajectoryError):
        load_handle(text)
