"""Hecke cosets of Gamma_2 in S(m), the amplifier inequality, and counts of
group elements moving a point only slightly."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import intmat
from .bergman import _unimodular_table, enumerate_coprime_pairs
from .symspace import PointH

COSET_CAP = 200


class CosetCapError(ValueError):
    pass


def _divisors(m: int) -> list[int]:
    return [d for d in range(1, m + 1) if m % d == 0]


def sigma0(m: int) -> int:
    return len(_divisors(m))


@dataclass(frozen=True)
class CosetRep:
    A: tuple[tuple[int, int], tuple[int, int]]
    B: tuple[tuple[int, int], tuple[int, int]]
    C_blk: tuple[tuple[int, int], tuple[int, int]]
    m: int

    def matrix(self) -> list[list[int]]:
        zero = [[0, 0], [0, 0]]
        return intmat.blocks_to_matrix(self.A, self.B, zero, self.C_blk)

    def is_similitude(self) -> bool:
        return intmat.is_symplectic(self.matrix(), self.m)

    def act(self, Z: np.ndarray) -> np.ndarray:
        A, B, C = (np.array(x, dtype=float) for x in (self.A, self.B, self.C_blk))
        W = (A @ Z + B) @ np.linalg.inv(C)
        return (W + W.T) / 2

    def key(self) -> tuple:
        return intmat.hnf_key(self.matrix())


def _a_choices(m: int):
    """Upper triangular HNF A with m ta^{-1} integral: (a11, a12, a22, c11, c21, c22)."""
    for a11 in _divisors(m):
        for a22 in _divisors(m):
            for a12 in range(a22):
                if (m * a12) % (a11 * a22):
                    continue
                yield a11, a12, a22, m // a11, -(m * a12) // (a11 * a22), m // a22


def _check_m(m: int, cap: int):
    if m < 1:
        raise ValueError("m must be positive")
    if m > cap:
        raise CosetCapError(f"m = {m} exceeds the coset cap {cap}")


def enumerate_hecke_cosets(m: int, cap: int = COSET_CAP) -> list[CosetRep]:
    """Representatives (A, B; 0, C) of Gamma_2 \\ S(m).

    A is in row Hermite form, C = m tA^{-1}, 0 <= b11 < c11, 0 <= b12, b22 < c22,
    and b21 is forced by the symmetry of A tB.
    """
    _check_m(m, cap)
    out = []
    for a11, a12, a22, c11, c21, c22 in _a_choices(m):
        for b12 in range(c22):
            for b22 in range(c22):
                num = a22 * b12 - a12 * b22
                if num % a11:
                    continue
                b21 = num // a11
                for b11 in range(c11):
                    rep = CosetRep(((a11, a12), (0, a22)), ((b11, b12), (b21, b22)), ((c11, 0), (c21, c22)), m)
                    if not rep.is_similitude():
                        raise AssertionError(f"constructed a non-similitude {rep}")
                    out.append(rep)
    return out


def hecke_coset_count(m: int, cap: int = COSET_CAP) -> int:
    """Count of the same constraint system without building the representatives."""
    _check_m(m, cap)
    total = 0
    for a11, a12, a22, c11, _, c22 in _a_choices(m):
        b = np.arange(c22)
        num = a22 * b[:, None] - a12 * b[None, :]
        total += c11 * int(np.count_nonzero(num % a11 == 0))
    return total


def coset_bound(m: int) -> int:
    return m**3 * sigma0(m) ** 2


def brute_force_coset_count(m: int) -> int:
    """Independent count over 4x4 row Hermite forms H with det H = m^2.

    Row Hermite form is a complete invariant for left GL_4(Z)-equivalence, and a
    GL_4(Z) element relating two similitudes of the same multiplier is symplectic.
    H is equivalent to a similitude iff H J tH is m times a unimodular
    alternating form (every such form has a symplectic basis over Z).
    """
    target = m * m  # det M = m^2
    J = [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]]
    count = 0
    for d in _ordered_factorizations(target, 4):
        ranges = []
        for j in range(4):
            ranges.extend([range(d[j])] * j)  # entries above the pivot of column j
        for vals in itertools.product(*ranges):
            M = [[0] * 4 for _ in range(4)]
            it = iter(vals)
            for j in range(4):
                M[j][j] = d[j]
                for i in range(j):
                    M[i][j] = next(it)
            G = intmat.matmul(intmat.matmul(M, J), intmat.transpose(M))
            if all(x % m == 0 for r in G for x in r):
                count += 1
    return count


def _ordered_factorizations(N: int, parts: int):
    if parts == 1:
        yield (N,)
        return
    for d in _divisors(N):
        for rest in _ordered_factorizations(N // d, parts - 1):
            yield (d,) + rest


# ---------------------------------------------------------------- amplifier


@dataclass(frozen=True)
class AmplifierPoint:
    x: float
    y: float
    z: float
    p: int


@dataclass(frozen=True)
class AmplifierGap:
    p: int
    value: float
    argmin: AmplifierPoint
    n_feasible: int


def amplifier_gap(p: int, grid_n: int = 50, c: tuple[float, float, float] = (3.0, 3.0, 3.0)) -> AmplifierGap:
    """Minimum of (x + y/p^{3/2} + z/p^{9/2})/p^{3/2} over grid points satisfying
    p^6 <= (p^2 + 2p^3) x^2 + x^4 + p^2 y + y x^2 + y^2 + z inside the Ramanujan boxes."""
    if p < 2:
        raise ValueError("p must be >= 2")
    xs = np.linspace(0.0, c[0] * p**1.5, grid_n)
    ys = np.linspace(0.0, c[1] * p**3, grid_n)
    zs = np.linspace(0.0, c[2] * p**6, grid_n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    rest = (p**2 + 2 * p**3) * X**2 + X**4 + p**2 * Y + Y * X**2 + Y**2
    # for each (x, y) the cheapest feasible z on the grid
    need = p**6 - rest
    idx = np.searchsorted(zs, need * (1 - 1e-15), side="left")
    ok = idx < grid_n
    zbest = zs[np.minimum(idx, grid_n - 1)]
    obj = (X + Y / p**1.5 + zbest / p**4.5) / p**1.5
    obj = np.where(ok, obj, np.inf)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    n_feas = int(np.sum(grid_n - idx[ok]))
    pt = AmplifierPoint(float(xs[i]), float(ys[j]), float(zbest[i, j]), p)
    return AmplifierGap(p, float(obj[i, j]), pt, n_feas)


# ---------------------------------------------------------------- near-stabilizer counts


def near_identity_count(z: complex, delta: float) -> int:
    """#{gamma in SL_2(Z): |gamma z - z| <= sqrt(delta) Im z}, counting gamma and -gamma."""
    y = z.imag
    if y <= 0:
        raise ValueError("z must lie in the upper half plane")
    if not 0 <= delta < 1:
        raise ValueError("need 0 <= delta < 1 (otherwise the count is infinite)")
    r = math.sqrt(delta) * y
    slack = 1e-12 * max(1.0, y)
    # |Im gamma z - y| <= r forces |cz + d|^2 <= 1/(1 - sqrt(delta))
    jmax = 1 / math.sqrt(1 - math.sqrt(delta))
    count = 0
    # c = 0: gamma = +-(1 b; 0 1)
    count += 2 * (2 * int(math.floor((r + slack))) + 1)
    cmax = int(math.floor(jmax / y + 1e-12))
    for c in range(1, cmax + 1):
        dlo = int(math.floor(-c * z.real - jmax)) - 1
        dhi = int(math.ceil(-c * z.real + jmax)) + 1
        for d in range(dlo, dhi + 1):
            if math.gcd(c, d) != 1 or abs(c * z + d) > jmax + 1e-12:
                continue
            a0 = pow(d, -1, c) if c > 1 else 0
            b0 = (a0 * d - 1) // c
            w0 = (a0 * z + b0) / (c * z + d)
            # gamma = T^j gamma0 moves gamma0 z to gamma0 z + j
            for jj in range(int(math.floor(z.real - w0.real - r)) - 1, int(math.ceil(z.real - w0.real + r)) + 2):
                if abs(w0 + jj - z) <= r + slack:
                    count += 2  # gamma and -gamma
    return count


def _rep_actions(m: int):
    if m == 1:
        yield lambda Z: Z
        return
    for rep in enumerate_hecke_cosets(m):
        yield rep.act


def near_K_count(Z: PointH, m: int, delta: float, H: float = 4.0) -> int:
    """#{gamma in S(m): ||gamma<Z> - Z||_F <= delta}, searching Gamma_2-translates of each
    coset representative through classes with |det(CW + D)| <= H.

    The class cut is exact (it comes from det Im); H only caps it, in which case
    elements may be missed and the count is a lower bound.
    """
    if Z.n != 2:
        raise ValueError("near_K_count needs n = 2")
    if m > 20:
        raise ValueError("m must be <= 20")
    Zc = Z.Z
    Yz = Zc.imag
    lmin = float(np.linalg.eigvalsh(Yz)[0])
    if delta >= lmin:
        raise ValueError("delta must be below the smallest eigenvalue of Im Z")
    det_lo = (lmin - delta) * (float(np.linalg.eigvalsh(Yz)[1]) - delta)
    tr_hi = float(np.trace(Yz)) + math.sqrt(2) * delta
    count = 0
    for act in _rep_actions(m):
        W = act(Zc)
        detYw = float(np.linalg.det(W.imag))
        need = math.sqrt(detYw / det_lo)
        pairs = enumerate_coprime_pairs(2, PointH.from_complex(W), min(H, need * (1 + 1e-9)))
        for pair in pairs:
            g = pair.completion()
            W0 = g.act(W)
            Y0 = W0.imag
            unorm = tr_hi / float(np.linalg.eigvalsh(Y0)[0])
            for U in _unimodular_table(max(2, int(math.ceil(unorm)))):
                V = U @ W0 @ U.T
                dim2 = float(np.sum((V.imag - Yz) ** 2))
                if dim2 > delta**2 * (1 + 1e-12):
                    continue
                # integer symmetric S with ||Re V + S - X||_F^2 <= delta^2 - dim2
                R = Zc.real - V.real
                room = delta**2 - dim2
                cands = [range(int(math.ceil(R[i, j] - math.sqrt(room) - 1e-12)), int(math.floor(R[i, j] + math.sqrt(room) + 1e-12)) + 1) for i, j in ((0, 0), (0, 1), (1, 1))]
                for s11, s12, s22 in itertools.product(*cands):
                    S = np.array([[s11, s12], [s12, s22]], dtype=float)
                    if float(np.sum((R - S) ** 2)) <= room * (1 + 1e-12) + 1e-24:
                        count += 2  # U and -U give gamma and -gamma
    return count


def integral_unitary_stabilizer() -> list[list[list[int]]]:
    """The 32 elements (A B; -B A) of Sp_4(Z) with A + iB a monomial matrix over {+-1, +-i}."""
    out = []
    units = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    for perm in ((0, 1), (1, 0)):
        for u1, u2 in itertools.product(units, units):
            A = [[0, 0], [0, 0]]
            B = [[0, 0], [0, 0]]
            for row, (re, im) in zip(range(2), (u1, u2)):
                A[row][perm[row]] = re
                B[row][perm[row]] = im
            M = intmat.blocks_to_matrix(A, B, [[-x for x in r] for r in B], A)
            out.append(M)
    return out


def rational_point(entries) -> list[list[Fraction]]:
    return [[Fraction(x) for x in r] for r in entries]
