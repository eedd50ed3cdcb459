from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegelbk.symspace import (
    ApproximateReductionWarning,
    NotPositiveDefiniteError,
    PointH,
    SymMatQ,
    SymplecticMat,
    im_of_action_formula,
    inversion_generators,
    is_minkowski_reduced_2,
    minkowski_reduce,
    parse_matrix,
    random_word,
    reduce_to_fundamental,
    reduction_sandwich_margin,
    standard_generators,
)


def test_parse_roundtrip():
    A = parse_matrix("2 1 1/2 3")
    assert A[0, 1] == Fraction(1, 2)
    assert parse_matrix(A.to_text()) == A
    with pytest.raises(ValueError):
        parse_matrix("2 1 2")
    with pytest.raises(ValueError):
        parse_matrix("")


def test_symmetry_enforced():
    with pytest.raises(ValueError):
        SymMatQ.from_rows([[1, 2], [3, 1]])


@st.composite
def pd2(draw):
    a = draw(st.integers(1, 40))
    b = draw(st.integers(-60, 60))
    c = draw(st.integers(1, 40))
    d = draw(st.integers(1, 12))
    # A = L tL + small diagonal keeps the sample positive definite
    L = [[Fraction(a, d), 0], [Fraction(b, d), Fraction(c, d)]]
    return SymMatQ.from_rows(
        [[L[0][0] ** 2, L[0][0] * L[1][0]], [L[0][0] * L[1][0], L[1][0] ** 2 + L[1][1] ** 2]]
    )


@given(pd2())
@settings(max_examples=150, deadline=None)
def test_minkowski_reduce_n2(Y):
    Yr, U = minkowski_reduce(Y)
    assert abs(U.det()) == 1
    assert Yr == Y.congruence(U.entries)
    assert is_minkowski_reduced_2(Yr)
    assert Yr.det() == Y.det()
    # first minimum: no short vector beats y11
    M = Y.to_numpy()
    best = min(
        float(np.array([u, v]) @ M @ np.array([u, v])) for u in range(-6, 7) for v in range(-6, 7) if (u, v) != (0, 0)
    )
    assert float(Yr[0, 0]) <= best * (1 + 1e-12)


def test_minkowski_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        minkowski_reduce(SymMatQ.from_rows([[1, 2], [2, 1]]))


def test_greedy_reduction_warns_for_n3():
    with pytest.warns(ApproximateReductionWarning):
        Yr, U = minkowski_reduce(SymMatQ.from_rows([[5, 2, 1], [2, 4, 1], [1, 1, 3]]))
    assert abs(U.det()) == 1


@given(pd2())
@settings(max_examples=80, deadline=None)
def test_sandwich_margin_bounded_for_reduced(Y):
    Yr, _ = minkowski_reduce(Y)
    r = reduction_sandwich_margin(Yr)
    assert 1 <= r <= 2 + 1e-8


def test_sandwich_margin_extreme_case():
    assert reduction_sandwich_margin(SymMatQ.from_rows([[2, 1], [1, 2]])) == pytest.approx(2.0, abs=1e-8)
    assert reduction_sandwich_margin(SymMatQ.diag(1, 5)) == 1.0


@pytest.mark.parametrize("n", [1, 2])
def test_generators_are_symplectic(n):
    for g in standard_generators(n):
        assert g.is_similitude()
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert random_word(n, 6, rng).is_similitude()
    for g in inversion_generators():
        assert g.is_similitude()


def test_im_formula_matches_action():
    rng = np.random.default_rng(3)
    Z = np.array([[0.1 + 1.2j, 0.3j], [0.3j, -0.2 + 1.5j]])
    for _ in range(10):
        g = random_word(2, 5, rng)
        W = g.act(Z)
        assert np.allclose(W, W.T, atol=1e-9)
        assert np.allclose(W.imag, im_of_action_formula(g, Z), atol=1e-9)


def test_reduce_n1():
    Z, g = reduce_to_fundamental(PointH.from_complex([[0.7 + 0.8j]]))
    z = complex(Z.Z[0, 0])
    assert z == pytest.approx(0.41096 + 1.09589j, abs=1e-5)
    assert abs(z.real) <= 0.5 and abs(z) >= 1
    assert g.act(np.array([[0.7 + 0.8j]]))[0, 0] == pytest.approx(z)


def test_reduce_n2_raises_height():
    rng = np.random.default_rng(5)
    Z0 = np.array([[0.1 + 1.2j, 0.3j], [0.3j, -0.2 + 1.5j]])
    for _ in range(5):
        g = random_word(2, 8, rng)
        Zm = PointH.from_complex(g.act(Z0))
        Zr, h = reduce_to_fundamental(Zm)
        assert np.allclose(h.act(Zm.Z), Zr.Z, atol=1e-8)
        # every inversion fails to increase det Im
        for m in inversion_generators():
            assert abs(np.linalg.det(m.j(Zr.Z))) >= 1 - 1e-9
        assert np.abs(Zr.X).max() <= 0.5 + 1e-9
        Y = Zr.Y
        assert 2 * abs(Y[0, 1]) <= Y[0, 0] + 1e-9 and Y[0, 0] <= Y[1, 1] + 1e-9


def test_point_validation():
    with pytest.raises(NotPositiveDefiniteError):
        PointH(np.zeros((2, 2)), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        PointH(np.array([[0, 1], [0, 0]]), np.eye(2))


def test_identity_similitude():
    assert SymplecticMat.identity(2).is_similitude()
    assert not SymplecticMat(((1, 1), (1, 1))).is_similitude()
