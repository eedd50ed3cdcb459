import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siegelbk import heckeamp, intmat
from siegelbk.heckeamp import (
    CosetCapError,
    amplifier_gap,
    brute_force_coset_count,
    coset_bound,
    enumerate_hecke_cosets,
    hecke_coset_count,
    integral_unitary_stabilizer,
    near_identity_count,
    near_K_count,
)
from siegelbk.symspace import PointH

RHO = cmath.exp(2j * math.pi / 3)


def test_small_counts():
    assert [hecke_coset_count(m) for m in range(1, 8)] == [1, 15, 40, 151, 156, 600, 400]


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_against_brute_force(m):
    assert hecke_coset_count(m) == brute_force_coset_count(m)


@pytest.mark.parametrize("m", [1, 2, 4, 6, 9, 12])
def test_representatives(m):
    reps = enumerate_hecke_cosets(m)
    assert len(reps) == hecke_coset_count(m)
    assert all(r.is_similitude() for r in reps)
    # distinct left Gamma_2 classes
    assert len({r.key() for r in reps}) == len(reps)


def test_count_bound_and_cap():
    assert all(hecke_coset_count(m) <= coset_bound(m) for m in range(1, 40))
    with pytest.raises(CosetCapError):
        hecke_coset_count(201)
    with pytest.raises(ValueError):
        enumerate_hecke_cosets(0)


def test_hecke_action_preserves_siegel_space():
    Z = np.array([[0.1 + 1.2j, 0.3j], [0.3j, -0.2 + 1.5j]])
    for r in enumerate_hecke_cosets(3):
        W = r.act(Z)
        assert np.all(np.linalg.eigvalsh(W.imag) > 0)


def test_amplifier_value_constant_in_p():
    vals = [amplifier_gap(p).value for p in (11, 13, 53, 97)]
    assert vals == pytest.approx([0.673469] * 4, abs=1e-6)


@pytest.mark.parametrize("p", [11, 29])
def test_amplifier_nested_grids(p):
    # grid 21 on [0, 3] is a subset of grid 41 on [0, 6], so the minimum can only drop
    coarse = amplifier_gap(p, 21, (3, 3, 3))
    fine = amplifier_gap(p, 41, (6, 6, 6))
    assert fine.value <= coarse.value + 1e-12


def test_amplifier_degenerate_boundary():
    # with z allowed only up to p^6 exactly, the point (0, 0, p^6) is feasible
    g = amplifier_gap(11, 2, (1, 1, 1))
    assert g.value == pytest.approx(11**6 / 11**4.5 / 11**1.5)
    with pytest.raises(ValueError):
        amplifier_gap(1)


@pytest.mark.parametrize(
    "z,count", [(0.1234 + 1.3456j, 2), (1j, 4), (RHO, 6)]
)
def test_near_identity_stabilizers(z, count):
    assert near_identity_count(z, 1e-6) == count
    # delta of order 1/k at k = 10^4 sees the same stabilizer
    assert near_identity_count(z, 1e-4) == count


@given(st.floats(-0.5, 0.5), st.floats(0.9, 3.0), st.floats(0.0, 0.9))
@settings(max_examples=40, deadline=None)
def test_near_identity_monotone_and_brute(x, y, delta):
    z = complex(x, y)
    if abs(z) < 1:
        return
    c1 = near_identity_count(z, delta)
    assert c1 >= 2 and c1 % 2 == 0
    assert near_identity_count(z, min(0.95, delta + 0.05)) >= c1
    # against a plain search over small matrices
    r = math.sqrt(delta) * y
    brute = 0
    for c in range(-8, 9):
        for d in range(-12, 13):
            if math.gcd(c, d) != 1:
                continue
            if c == 0:
                brute += sum(1 for b in range(-12, 13) if abs(b) <= r + 1e-12) if d in (1, -1) else 0
                continue
            a0 = pow(d, -1, abs(c)) if abs(c) > 1 else 0
            for a in range(a0 - 12 * abs(c), a0 + 12 * abs(c) + 1, abs(c)):
                if (a * d - 1) % c:
                    continue
                b = (a * d - 1) // c
                if abs((a * z + b) / (c * z + d) - z) <= r + 1e-12:
                    brute += 1
    assert c1 == brute


def test_near_K_counts():
    assert near_K_count(PointH.from_complex(1j * np.eye(2)), 1, 1e-3) == 32
    Z2 = np.array([[0.1 + 1.2j, 0.3j], [0.3j, -0.2 + 1.5j]])
    assert near_K_count(PointH.from_complex(Z2), 1, 1e-3) == 2
    with pytest.raises(ValueError):
        near_K_count(PointH.from_complex(Z2), 21, 1e-3)


def test_near_K_monotone_in_delta():
    Z = PointH.from_complex(np.array([[0.0 + 1.0j, 0.5j], [0.5j, 1.0j]]))
    counts = [near_K_count(Z, 1, d) for d in (1e-3, 0.1, 0.3)]
    assert counts == sorted(counts)


def test_unitary_stabilizer():
    els = integral_unitary_stabilizer()
    assert len(els) == 32
    assert len({tuple(map(tuple, M)) for M in els}) == 32
    I = 1j * np.eye(2)
    for M in els:
        assert intmat.is_symplectic(M, 1)
        A = np.array(M)[:2, :2]
        B = np.array(M)[:2, 2:]
        C = np.array(M)[2:, :2]
        D = np.array(M)[2:, 2:]
        W = (A @ I + B) @ np.linalg.inv(C @ I + D)
        assert np.allclose(W, I)
