import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakonlab.kernel import (
    CAMASSA_HOLM,
    HUNTER_SAXTON,
    KernelId,
    KernelSpec,
    check_decomposition,
    decompose_K,
    decompose_K_array,
    difference_quotient,
    eval_A,
    eval_L_smooth,
    verify_one_sided_lipschitz,
)

reals = st.floats(-8, 8, allow_nan=False)


def test_published_constants():
    assert (CAMASSA_HOLM.a, CAMASSA_HOLM.b, CAMASSA_HOLM.L) == (1.0, 0.5, 1.0)
    assert (CAMASSA_HOLM.C1, CAMASSA_HOLM.C2, CAMASSA_HOLM.C3) == (1.0, 2.0, 1.0)
    assert (HUNTER_SAXTON.a, HUNTER_SAXTON.b, HUNTER_SAXTON.L) == (0.0, 0.5, 0.0)
    assert (HUNTER_SAXTON.C1, HUNTER_SAXTON.C2, HUNTER_SAXTON.C3) == (1.0, 0.0, 0.0)
    assert KernelSpec.from_name("hs") is HUNTER_SAXTON
    assert KernelSpec.from_name("Camassa-Holm").kernel_id is KernelId.CAMASSA_HOLM
    with pytest.raises(ValueError):
        KernelSpec.from_name("kdv")
    with pytest.raises(ValueError):
        KernelSpec(KernelId.CAMASSA_HOLM, a=1.0, b=0.0, L=1.0, C1=1.0, C2=1.0, C3=1.0)


def test_eval_A_examples():
    assert eval_A(CAMASSA_HOLM, 0.0, 0.0) == 0.0
    assert eval_A(CAMASSA_HOLM, 1.0, 0.0) == pytest.approx(0.5 * math.exp(-1), rel=1e-15)
    assert eval_A(CAMASSA_HOLM, 0.0, 1.0) == pytest.approx(-0.5 * math.exp(-1), rel=1e-15)
    assert eval_A(HUNTER_SAXTON, 1.0, 0.0) == 1.0
    assert eval_A(HUNTER_SAXTON, 0.0, 1.0) == 0.0
    assert eval_A(HUNTER_SAXTON, 0.0, 0.0) == 1.0


def test_eval_L_smooth_examples():
    assert eval_L_smooth(CAMASSA_HOLM, 0.0, 0.0) == -0.5
    assert eval_L_smooth(CAMASSA_HOLM, 0.0, math.log(2)) == pytest.approx(-0.25, rel=1e-15)
    assert eval_L_smooth(HUNTER_SAXTON, 0.3, -2.0) == 0.0


def test_decompose_examples():
    d = decompose_K(HUNTER_SAXTON, 0.0, 1.0, 0.5)
    assert (d.L_term, d.L1, d.L2, d.L3) == (0.0, 1.0, 0.0, 0.0)
    d = decompose_K(CAMASSA_HOLM, 0.0, 0.1, 5.0)
    assert d.L1 == 0.0 and d.L2 == 0.0
    assert abs(d.L3) <= 0.1
    assert d.total == pytest.approx(difference_quotient(CAMASSA_HOLM, 0.0, 0.1, 5.0), abs=1e-14)
    with pytest.raises(ValueError):
        decompose_K(CAMASSA_HOLM, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        decompose_K_array(CAMASSA_HOLM, [1.0], [0.5], [0.0])


@given(reals, st.floats(1e-3, 5.0), reals)
def test_reconstruction_property(zeta, h, y):
    eta = zeta + h
    for spec in (CAMASSA_HOLM, HUNTER_SAXTON):
        d = decompose_K(spec, zeta, eta, y)
        raw = difference_quotient(spec, zeta, eta, y)
        assert abs(d.total - raw) <= 1e-12 * max(1.0, abs(raw))


@given(reals, st.floats(1e-3, 5.0), reals)
def test_bounds_property(zeta, h, y):
    eta = zeta + h
    d = decompose_K(CAMASSA_HOLM, zeta, eta, y)
    inside = zeta < y < eta
    if inside:
        assert abs(d.L1) == pytest.approx(CAMASSA_HOLM.C1 / h, rel=1e-12)
    elif not (y == zeta or y == eta):
        assert d.L1 == 0.0
    assert abs(d.L2) <= CAMASSA_HOLM.C2 * (zeta <= y <= eta) + 1e-10
    assert abs(d.L3) <= CAMASSA_HOLM.C3 * h + 1e-10
    assert difference_quotient(CAMASSA_HOLM, zeta, eta, y) >= -CAMASSA_HOLM.L - 1e-12


def test_array_matches_scalar(rng):
    z = rng.uniform(-3, 3, 200)
    e = z + rng.uniform(1e-3, 2, 200)
    y = rng.uniform(-4, 4, 200)
    arr = decompose_K_array(CAMASSA_HOLM, z, e, y)
    for i in range(0, 200, 17):
        d = decompose_K(CAMASSA_HOLM, z[i], e[i], y[i])
        assert np.allclose(arr[:, i], [d.L_term, d.L1, d.L2, d.L3], rtol=1e-14, atol=1e-15)


def test_lipschitz_reports():
    hs = verify_one_sided_lipschitz(HUNTER_SAXTON, 10_000, seed=0)
    ch = verify_one_sided_lipschitz(CAMASSA_HOLM, 10_000, seed=0)
    assert hs.passed and hs.min_quotient >= 0.0
    assert ch.passed and ch.min_quotient >= -1.0
    with pytest.raises(ValueError):
        verify_one_sided_lipschitz(CAMASSA_HOLM, 0)


def test_degenerate_pair_quotient_is_finite():
    x1, y = 0.3, 0.3 + 1e-13
    q = difference_quotient(CAMASSA_HOLM, x1, x1 + 1e-12, y)
    assert np.isfinite(q)


def test_A_continuous_off_diagonal():
    y = 0.4
    x = np.linspace(-3, 3, 601)
    x = x[np.abs(x - y) > 1e-3]
    for d in (1e-4, 1e-6, 1e-8):
        jump = np.abs(eval_A(CAMASSA_HOLM, x + d, y) - eval_A(CAMASSA_HOLM, x, y))
        assert jump.max() <= 0.5 * d * 1.01


def test_check_decomposition_seeded():
    a = check_decomposition(CAMASSA_HOLM, 10_000, seed=3)
    b = check_decomposition(CAMASSA_HOLM, 10_000, seed=3)
    assert a == b and a.passed
    assert a.max_reconstruction_error <= 1e-12
