import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegelbk import bergman
from siegelbk.bergman import Truncation
from siegelbk.petersson import delta_eval
from siegelbk.symspace import PointH, random_word

P = PointH.from_complex
Z2 = np.array([[0.1 + 1.2j, 0.3j], [0.3j, -0.2 + 1.5j]])
W2 = np.array([[0.2 + 1.1j, 0.1 + 0.2j], [0.1 + 0.2j, 0.1 + 1.3j]])
# <Delta, Delta> by Gauss-Legendre/Laguerre quadrature over the fundamental domain
DELTA_NORM = 1.0353620568043233e-6


@pytest.mark.parametrize("z", [1j, 0.3 + 1.1j, -0.45 + 2.0j])
def test_weight12_kernel_is_delta(z):
    v = bergman.kernel_diag(P([[z]]), 12).value
    ref = z.imag**12 * abs(delta_eval(np.array([z]))[0]) ** 2 / DELTA_NORM
    assert v == pytest.approx(ref, rel=1e-8)


@given(st.floats(-0.5, 0.5), st.floats(0.9, 2.5), st.integers(0, 8), st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_kernel_invariant_n1(x, y, length, seed):
    z = complex(x, y)
    g = random_word(1, length, np.random.default_rng(seed))
    gz = complex(g.act(np.array([[z]]))[0, 0])
    if gz.imag < 0.2:
        return  # keep the coset sum light
    a = bergman.kernel_diag(P([[z]]), 20).value
    b = bergman.kernel_diag(P([[gz]]), 20).value
    assert b == pytest.approx(a, rel=1e-8)


def test_hermitian_n1():
    z, w = 0.1 + 1.2j, -0.3 + 0.9j
    a = bergman.kernel_offdiag(P([[z]]), P([[w]]), 16).value
    b = bergman.kernel_offdiag(P([[w]]), P([[z]]), 16).value
    assert a == pytest.approx(np.conj(b), rel=1e-10)


def test_hermitian_n2_with_truncation():
    # the coset sum converges slowly in H; 5% reflects H = 5
    t = Truncation(tol=1e-10, H=5.0)
    a = bergman.kernel_offdiag(P(Z2), P(W2), 10, t).value
    b = bergman.kernel_offdiag(P(W2), P(Z2), 10, t).value
    assert abs(a - np.conj(b)) <= 0.05 * abs(a)


def test_n2_value_stable_in_H():
    v4 = bergman.kernel_diag(P(Z2), 10, Truncation(tol=1e-10, H=4.0))
    assert v4.value == pytest.approx(1.7945589591795938, rel=1e-9)
    v6 = bergman.kernel_diag(P(Z2), 10, Truncation(tol=1e-10, H=6.0)).value
    assert abs(v6 - v4.value) <= 1e-2 * v6
    assert v4.value >= bergman.identity_term_diag(P(Z2), 10) * 0.5


def test_weight10_vanishes_at_i():
    v = bergman.kernel_diag(P(1j * np.eye(2)), 10, Truncation(tol=1e-10, H=3.0)).value
    assert abs(v) < 1e-12


def test_lipschitz_sides_agree():
    Z = P([[0.25 + 1.05j]])
    a = bergman.lipschitz_series(Z, 14, "direct")
    b = bergman.lipschitz_series(Z, 14, "fourier")
    assert abs(a - b) <= 1e-9 * abs(b)


def test_h_bounded_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 3))
        g = random_word(n, int(rng.integers(0, 6)), rng)
        if n == 1:
            Z = P([[complex(rng.uniform(-1, 1), rng.uniform(0.2, 3))]])
        else:
            L = np.array([[rng.uniform(0.5, 2), 0], [rng.uniform(-1, 1), rng.uniform(0.5, 2)]])
            X = rng.uniform(-1, 1, (2, 2))
            Z = PointH((X + X.T) / 2, L @ L.T)
        assert abs(bergman.h_factor(g, Z)) <= 1 + 1e-9


def test_h_exact_identity_is_one():
    h, ok = bergman.h_factor_exact(random_word(2, 0, np.random.default_rng(0)), [[0, 0], [0, 0]], [[1, 0], [0, 2]])
    assert ok and h == bergman.GaussQ(1)
    assert bergman.h_factor_exact(random_word(1, 5, np.random.default_rng(4)), [[Fraction(1, 3)]], [[Fraction(1, 2)]])[1]


def _brute_classes_n1(z, H, box=30):
    return {(c, d) for c in range(0, box) for d in range(-box, box) if math.gcd(c, d) == 1 and (c > 0 or d == 1) and abs(c * z + d) <= H}


def test_coprime_pairs_n1_complete():
    z = 0.2 + 0.7j
    for H in (1.0, 2.0, 5.0):
        got = {(p.C[0][0], p.D[0][0]) for p in bergman.enumerate_coprime_pairs(1, P([[z]]), H)}
        assert got == _brute_classes_n1(z, H)


@pytest.mark.parametrize("H,count", [(1.5, 3), (2.0, 9)])
def test_coprime_pairs_n2_brute_force_counts(H, count):
    # counts from an exhaustive search over entries in [-3, 3]
    pairs = bergman.enumerate_coprime_pairs(2, P(Z2), H)
    assert len(pairs) == count
    assert len({p.key() for p in pairs}) == count
    for p in pairs:
        assert p.completion().is_similitude()


def test_abs_h_sum_converges():
    z = P([[0.3 + 1.4j]])
    a, b = bergman.abs_h_sum(z, 12, 3.0), bergman.abs_h_sum(z, 12, 6.0)
    assert 1 <= a <= b <= a * 1.01
    assert bergman.abs_h_sum(z, 16, 6.0) < b


def test_weight_checks():
    with pytest.raises(ValueError):
        bergman.kernel_diag(P([[1j]]), 10)
    with pytest.raises(ValueError):
        bergman.kernel_diag(P([[1j]]), 13)


def test_sup_scan_small():
    res = bergman.sup_scan(1, 12)
    assert res.value == pytest.approx(3.969, rel=1e-3)
    assert abs(res.argmax.Z[0, 0]) >= 1 - 1e-9
    with pytest.raises(NotImplementedError):
        bergman.sup_scan(2, 12)


def test_coprime_pairs_large_imaginary_part():
    Z = P(5j * np.eye(2))
    # rank-one classes have |det(CZ + D)| >= 5, so H = 2 leaves the identity class
    assert len(bergman.enumerate_coprime_pairs(2, Z, 2.0)) == 1
    pairs = bergman.enumerate_coprime_pairs(2, Z, 5.01)
    assert len(pairs) == 3
    assert sorted(int(np.linalg.matrix_rank(np.array(p.C))) for p in pairs) == [0, 1, 1]
