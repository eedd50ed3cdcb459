import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegelbk.numerics import (
    DEFAULT_CTX,
    PrecisionBudgetError,
    PrecisionContext,
    bessel_bits_needed,
    bessel_j,
    e,
    fit_loglog_slope,
    kloosterman_sum,
    kloosterman_sum_complex,
    log_gamma,
    torus_quadrature,
)

# reference values from scipy.special.jv
J_REF = [
    (11, 4 * math.pi, 0.29133796793896594),
    (23, 4 * math.pi * math.sqrt(6) / 5, 4.418117984204821e-12),
    (5.5, 3.0, 0.022660934945461342),
]


@pytest.mark.parametrize("nu,x,ref", J_REF)
def test_bessel_matches_reference(nu, x, ref):
    assert float(bessel_j(nu, x)) == pytest.approx(ref, rel=1e-12)


def test_bessel_at_zero():
    assert bessel_j(0, 0) == 1
    assert bessel_j(3, 0) == 0


def test_bessel_budget_error_reports_bits():
    ctx = PrecisionContext(mantissa_bits=64)
    with pytest.raises(PrecisionBudgetError) as info:
        bessel_j(11, 200.0, ctx)
    assert info.value.needed_bits > 64
    # with the reported bits the call goes through
    v = bessel_j(11, 200.0, ctx.with_bits(info.value.needed_bits))
    assert abs(float(v)) < 0.1


def test_bessel_rejects_bad_order():
    with pytest.raises(ValueError):
        bessel_j(1.25, 1.0)
    with pytest.raises(ValueError):
        bessel_j(2, -1.0)


def _kloosterman_cmath(m, n, c):
    if c == 1:
        return 1.0
    return sum(
        cmath.exp(2j * math.pi * (m * d + n * pow(d, -1, c)) / c) for d in range(1, c) if math.gcd(d, c) == 1
    ).real


def test_kloosterman_small_values():
    assert [round(float(kloosterman_sum(1, 1, c)), 10) for c in (1, 2, 3, 4, 6)] == [1, 1, -1, -2, -1]


@given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 40))
@settings(max_examples=60, deadline=None)
def test_kloosterman_against_plain_complex(m, n, c):
    v = kloosterman_sum_complex(m, n, c)
    assert float(v.real) == pytest.approx(_kloosterman_cmath(m, n, c), abs=1e-9)
    assert abs(float(v.imag)) < 1e-30
    # Weil bound |S| <= tau(c) sqrt(gcd(m,n,c)) sqrt(c)
    tau = sum(1 for d in range(1, c + 1) if c % d == 0)
    assert abs(float(v.real)) <= tau * math.sqrt(math.gcd(math.gcd(m, n), c) * c) + 1e-9


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 30))
@settings(max_examples=40, deadline=None)
def test_kloosterman_symmetric(m, n, c):
    assert float(kloosterman_sum(m, n, c)) == pytest.approx(float(kloosterman_sum(n, m, c)), abs=1e-30)


def test_log_gamma():
    assert float(log_gamma(11)) == pytest.approx(math.log(math.factorial(10)), rel=1e-15)
    with pytest.raises(ValueError):
        log_gamma(0)


def test_e_is_periodic():
    assert e(0.25) == pytest.approx(1j)
    assert np.allclose(e(np.array([0.0, 1.0, 2.0])), 1)


def test_torus_quadrature_is_exact_on_low_frequencies():
    f = lambda x, y: np.exp(2j * np.pi * (3 * x - 2 * y)) + 0.5
    assert torus_quadrature(f, 8, d=2, vectorized=True) == pytest.approx(0.5)
    g = lambda x: cmath.exp(2j * math.pi * 8 * x)  # aliases onto the constant
    assert torus_quadrature(g, 8) == pytest.approx(1.0)


def test_fit_slope():
    assert fit_loglog_slope([(2, 8), (4, 64), (8, 512)]) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, 2)])


def test_context_validation():
    with pytest.raises(ValueError):
        PrecisionContext(mantissa_bits=10)
    assert DEFAULT_CTX.doubled().mantissa_bits == 2 * DEFAULT_CTX.mantissa_bits
    assert bessel_bits_needed(11, 4 * math.pi) <= DEFAULT_CTX.mantissa_bits
    with DEFAULT_CTX.workprec():
        assert mpmath.mp.prec == DEFAULT_CTX.mantissa_bits
