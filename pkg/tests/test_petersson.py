import math

import mpmath
import numpy as np
import pytest

from siegelbk import petersson
from siegelbk.fouriertail import AlphaBetaEnvelope, p_envelope
from siegelbk.latticecount import HalfIntegralForm
from siegelbk.petersson import (
    OracleBudgetError,
    c_nk,
    delta_coefficients,
    lower_bound_value,
    p_exact_deg1,
    p_oracle,
    poincare_coeff_deg1,
    unit_coeff_mass,
)

F = HalfIntegralForm


def test_tau_values():
    tau = delta_coefficients(12)
    assert tau[:6] == (1, -24, 252, -1472, 4830, -6048)


@pytest.mark.parametrize("t,ratio", [(2, 576), (3, 63504), (4, 1472**2)])
def test_weight12_ratios_are_tau_squared(t, ratio):
    r = float(p_exact_deg1(t, 12) / p_exact_deg1(1, 12))
    assert r == pytest.approx(ratio, rel=1e-9)


def test_weight12_times_norm_is_one():
    # p(1) = 1/<Delta, Delta>; the norm comes from an independent quadrature
    assert float(p_exact_deg1(1, 12)) * petersson.petersson_norm_delta() == pytest.approx(1.0, rel=1e-9)


def test_empty_space_k14():
    a, tail = poincare_coeff_deg1(1, 1, 14)
    assert abs(a) <= 1e-20
    assert abs(float(p_exact_deg1(1, 14))) <= 1e-10 * float(p_exact_deg1(1, 12))


@pytest.mark.parametrize("k", [12, 16, 26, 40])
def test_nonnegative_up_to_tail(k):
    for t in range(1, 21):
        a, tail = poincare_coeff_deg1(t, t, k)
        assert a + tail >= 0


def test_tail_modes():
    _, classical = poincare_coeff_deg1(1, 1, 12)
    _, weak = poincare_coeff_deg1(1, 1, 12, tail_mode="loose")
    assert classical < weak
    with pytest.raises(ValueError):
        poincare_coeff_deg1(1, 1, 12, tail_mode="other")
    with pytest.raises(ValueError):
        poincare_coeff_deg1(1, 1, 13)


@pytest.mark.parametrize("y", [0.8, 1.0, 1.3])
def test_oracle_independent_of_height(y):
    for t, k in ((1, 12), (2, 16)):
        exact = float(p_exact_deg1(t, k))
        assert p_oracle(1, F.from_entries(t), y, k, N=64) == pytest.approx(exact, rel=1e-9)


def test_oracle_budget():
    with pytest.raises(OracleBudgetError):
        petersson.cross_oracle_deg2([F.identity(2)], np.eye(2), 10, N=16)


@pytest.mark.parametrize("k", [12, 16, 20, 28])
def test_envelopes_dominate(k):
    for t in range(1, 11):
        sp = math.sqrt(max(float(p_exact_deg1(t, k)), 0.0))
        T = F.from_entries(t)
        assert float(p_envelope(T, k, AlphaBetaEnvelope.beta0_pair(1))) >= sp
        assert float(p_envelope(T, k, petersson.trivial_envelope_deg1(k))) >= sp
        assert petersson.p_trivial_upper_deg1(t, k) >= sp * sp


def test_c_nk_degree_one():
    for k in (12, 20, 30):
        want = mpmath.power(4 * mpmath.pi, 0.5 - k) * mpmath.gamma(k - 1)
        assert float(c_nk(1, k).value / want) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        c_nk(2, 1)


def test_c_nk_degree_two():
    k = 20
    want = mpmath.pi * mpmath.power(4 * mpmath.pi, 1.5 - 2 * k) * mpmath.gamma(k - 1.5) * mpmath.gamma(k - 2)
    assert float(c_nk(2, k).value / want) == pytest.approx(1.0, rel=1e-12)


def test_unit_mass_closure_n1():
    for k in (12, 16, 20):
        um = unit_coeff_mass(1, k)
        assert um.exact and um.lower == um.upper
        a, _ = poincare_coeff_deg1(1, 1, k)
        # c_k * mass = a_P(1) once the normalization factor is removed
        assert float(um.lower * c_nk(1, k).value / petersson.DEG1_NORMALIZATION) == pytest.approx(float(a), rel=1e-12)


@pytest.mark.parametrize("k", [20, 24, 30, 40])
def test_unit_mass_n2_bracket(k):
    um = unit_coeff_mass(2, k)
    assert 0 < um.lower <= um.upper
    assert mpmath.isfinite(lower_bound_value(2, k))


def test_unit_mass_n2_weight_guard():
    with pytest.raises(ValueError):
        unit_coeff_mass(2, 8)
