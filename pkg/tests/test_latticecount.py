from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegelbk.latticecount import (
    EnumerationBudgetError,
    HalfIntegralForm,
    WindowSpec,
    automorph_count,
    budget_maximum,
    continuity_defects,
    count_exponent_fit,
    cy_set,
    cy_set_direct,
    enumerate_forms,
    piecewise_exponents,
    w2_from_w1,
)

F = HalfIntegralForm


def test_form_validation():
    assert F.from_entries(1, Fraction(1, 2), 1).det() == Fraction(3, 4)
    with pytest.raises(ValueError):
        F.from_entries(Fraction(1, 2), 0, 1)
    with pytest.raises(ValueError):
        F.from_entries(1, 1, 1)
    with pytest.raises(ValueError):
        F.from_entries(1, Fraction(1, 3), 1)


@pytest.mark.parametrize(
    "Y,size",
    [(np.diag([2.0, 3.0]), 462), (np.array([[2.0, 0.5], [0.5, 3.0]]), 483)],
)
def test_cy_sizes_and_paths_agree(Y, size):
    w = WindowSpec(40)
    a = cy_set(Y, w)
    b = cy_set_direct(Y, w)
    assert len(a) == size
    assert sorted(T.twice for T in a) == sorted(T.twice for T in b)


def test_cy_elements_are_in_window():
    Y = np.diag([2.0, 3.0])
    w = WindowSpec(40)
    for T in cy_set(Y, w):
        R = np.linalg.cholesky(Y)
        ev = np.linalg.eigvalsh(R.T @ T.matrix() @ R)
        assert w.lo - 1e-9 <= ev.min() and ev.max() <= w.hi + 1e-9


@given(st.floats(0.3, 4.0), st.floats(0.3, 4.0), st.floats(-0.4, 0.4), st.floats(1.0, 15.0))
@settings(max_examples=40, deadline=None)
def test_enumerate_forms_complete(y1, y2, rho, B):
    y12 = rho * (y1 * y2) ** 0.5
    Y = np.array([[y1, y12], [y12, y2]])
    got = {T.twice for T in enumerate_forms(2, Y, B)}
    a, b, c = np.meshgrid(np.arange(2, 64, 2), np.arange(-64, 65), np.arange(2, 64, 2), indexing="ij")
    tr = (a * y1 + 2 * b * y12 + c * y2) / 2
    keep = (a * c - b * b > 0) & (tr <= B * (1 - 1e-9))
    want = set(zip(a[keep].tolist(), b[keep].tolist(), c[keep].tolist()))
    assert want <= got
    assert all(F(2, t).trace_with(Y) <= B * (1 + 1e-9) for t in got)


def test_enumeration_budget():
    with pytest.raises(EnumerationBudgetError):
        enumerate_forms(2, 0.01 * np.eye(2), 500.0, cap=1000)


def test_window_validation():
    with pytest.raises(ValueError):
        WindowSpec(11)
    with pytest.raises(ValueError):
        WindowSpec(12, eps=0.6)


@pytest.mark.parametrize(
    "entries,count",
    [((1, 0, 1), 8), ((1, 0, 2), 4), ((1, Fraction(1, 2), 1), 12), ((2,), 2)],
)
def test_automorph_count(entries, count):
    assert automorph_count(F.from_entries(*entries)) == count


def test_exponents_at_one():
    assert piecewise_exponents(1) == (Fraction(1, 2), Fraction(13, 6))


def test_exponents_continuous():
    for ds in continuity_defects().values():
        assert all(d == 0 for d in ds)


@given(st.fractions(0, 2, max_denominator=24))
def test_w2_is_composition(eta):
    assert w2_from_w1(eta) == piecewise_exponents(eta)[1]


def test_budget_maximum():
    val, args = budget_maximum()
    assert val == Fraction(9, 2)
    assert Fraction(2, 3) in args


def test_eta_range():
    with pytest.raises(ValueError):
        piecewise_exponents(Fraction(5, 2))


def test_count_fit_ignores_zeros():
    assert count_exponent_fit([(10, 0), (10, 100), (20, 400), (40, 1600)]) == pytest.approx(2.0)


def test_forms_at_identity_small_trace():
    got = sorted(T.twice for T in enumerate_forms(2, np.eye(2), 2.0))
    assert got == [(2, -1, 2), (2, 0, 2), (2, 1, 2)]
