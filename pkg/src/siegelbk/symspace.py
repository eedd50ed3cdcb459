"""Symmetric matrices, Minkowski reduction and reduction into the Siegel
fundamental domain for degree one and two.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np


class NotPositiveDefiniteError(ValueError):
    pass


class ReductionError(RuntimeError):
    pass


class ApproximateReductionWarning(UserWarning):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def _det_frac(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    # fraction-exact Gaussian elimination
    a = [list(r) for r in rows]
    det = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if a[r][i] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            a[i], a[piv] = a[piv], a[i]
            det = -det
        det *= a[i][i]
        for r in range(i + 1, n):
            f = a[r][i] / a[i][i]
            if f:
                for c in range(i, n):
                    a[r][c] -= f * a[i][c]
    return det


@dataclass(frozen=True)
class SymMatQ:
    """Exact rational symmetric matrix (full storage, symmetric by construction)."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        for i in range(n):
            if len(self.rows[i]) != n:
                raise ValueError("matrix must be square")
            for j in range(i):
                if self.rows[i][j] != self.rows[j][i]:
                    raise ValueError("matrix must be symmetric")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "SymMatQ":
        return cls(tuple(tuple(_frac(x) for x in r) for r in rows))

    @classmethod
    def from_upper(cls, n: int, upper: Sequence) -> "SymMatQ":
        vals = [_frac(x) for x in upper]
        if len(vals) != n * (n + 1) // 2:
            raise ValueError(f"expected {n * (n + 1) // 2} upper-triangle entries")
        a = [[Fraction(0)] * n for _ in range(n)]
        it = iter(vals)
        for i in range(n):
            for j in range(i, n):
                a[i][j] = a[j][i] = next(it)
        return cls.from_rows(a)

    @classmethod
    def identity(cls, n: int) -> "SymMatQ":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, *d) -> "SymMatQ":
        n = len(d)
        return cls.from_rows([[d[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def det(self) -> Fraction:
        return _det_frac([list(r) for r in self.rows])

    def leading_minors(self) -> list[Fraction]:
        return [_det_frac([list(r[:m]) for r in self.rows[:m]]) for m in range(1, self.n + 1)]

    def trace(self) -> Fraction:
        return sum((self.rows[i][i] for i in range(self.n)), Fraction(0))

    def diagonal_part(self) -> "SymMatQ":
        return SymMatQ.diag(*[self.rows[i][i] for i in range(self.n)])

    def congruence(self, U) -> "SymMatQ":
        """U A tU for an integer (or rational) matrix U."""
        n = self.n
        U = [[_frac(x) for x in r] for r in np.asarray(U, dtype=object).tolist()]
        UA = [[sum(U[i][l] * self.rows[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        return SymMatQ.from_rows(
            [[sum(UA[i][l] * U[j][l] for l in range(n)) for j in range(n)] for i in range(n)]
        )

    def scaled(self, c) -> "SymMatQ":
        c = _frac(c)
        return SymMatQ.from_rows([[c * x for x in r] for r in self.rows])

    def __sub__(self, other: "SymMatQ") -> "SymMatQ":
        return SymMatQ.from_rows(
            [[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)]
        )

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows])

    def upper(self) -> list[Fraction]:
        return [self.rows[i][j] for i in range(self.n) for j in range(i, self.n)]

    def to_text(self) -> str:
        return " ".join([str(self.n)] + [str(x) for x in self.upper()])


def parse_matrix(text: str) -> SymMatQ:
    """Parse 'n a11 a12 ... ann' (upper triangle, row-major, rationals)."""
    tok = text.split()
    if not tok:
        raise ValueError("empty matrix text")
    n = int(tok[0])
    return SymMatQ.from_upper(n, tok[1:])


def as_symmatq(A) -> SymMatQ:
    if isinstance(A, SymMatQ):
        return A
    arr = np.atleast_2d(np.asarray(A))
    return SymMatQ.from_rows(arr.tolist())


def is_positive_definite(A: SymMatQ) -> bool:
    return all(m > 0 for m in as_symmatq(A).leading_minors())


def is_positive_semidefinite(A: SymMatQ) -> bool:
    A = as_symmatq(A)
    n = A.n
    for size in range(1, n + 1):
        for idx in _subsets(n, size):
            if _det_frac([[A.rows[i][j] for j in idx] for i in idx]) < 0:
                return False
    return True


def _subsets(n: int, size: int):
    from itertools import combinations

    return combinations(range(n), size)


# ---------------------------------------------------------------- unimodular / symplectic


@dataclass(frozen=True)
class UnimodularMat:
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if abs(round(_det_frac([[Fraction(x) for x in r] for r in self.entries]))) != 1:
            raise ValueError("determinant must be +-1")

    @classmethod
    def identity(cls, n: int) -> "UnimodularMat":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.entries)

    def det(self) -> int:
        return int(_det_frac([[Fraction(x) for x in r] for r in self.entries]))

    def to_numpy(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)


def _int_matmul(a, b):
    return [[sum(a[i][l] * b[l][j] for l in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _transpose(a):
    return [list(r) for r in zip(*a)]


def symplectic_form(n: int) -> list[list[int]]:
    J = [[0] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        J[i][n + i] = 1
        J[n + i][i] = -1
    return J


@dataclass(frozen=True)
class SymplecticMat:
    """2n x 2n integer (or rational) matrix with tM J M = mu J."""

    entries: tuple[tuple, ...]
    mu: int = 1

    @classmethod
    def from_blocks(cls, A, B, C, D, mu: int = 1) -> "SymplecticMat":
        A, B, C, D = (np.asarray(x, dtype=object).reshape(len(np.atleast_2d(x)), -1).tolist() for x in (A, B, C, D))
        rows = [list(A[i]) + list(B[i]) for i in range(len(A))] + [
            list(C[i]) + list(D[i]) for i in range(len(C))
        ]
        return cls(tuple(tuple(x for x in r) for r in rows), mu)

    @classmethod
    def identity(cls, n: int) -> "SymplecticMat":
        return cls(tuple(tuple(int(i == j) for j in range(2 * n)) for i in range(2 * n)))

    @property
    def n(self) -> int:
        return len(self.entries) // 2

    def blocks(self):
        n = self.n
        M = [list(r) for r in self.entries]
        A = [r[:n] for r in M[:n]]
        B = [r[n:] for r in M[:n]]
        C = [r[:n] for r in M[n:]]
        D = [r[n:] for r in M[n:]]
        return A, B, C, D

    def np_blocks(self):
        return tuple(np.array(b, dtype=float) for b in self.blocks())

    def is_similitude(self) -> bool:
        M = [list(r) for r in self.entries]
        J = symplectic_form(self.n)
        lhs = _int_matmul(_int_matmul(_transpose(M), J), M)
        return lhs == [[self.mu * x for x in r] for r in J]

    def __matmul__(self, other: "SymplecticMat") -> "SymplecticMat":
        prod = _int_matmul([list(r) for r in self.entries], [list(r) for r in other.entries])
        return SymplecticMat(tuple(tuple(r) for r in prod), self.mu * other.mu)

    def act(self, Z: np.ndarray) -> np.ndarray:
        """M<Z> = (AZ+B)(CZ+D)^-1 in complex floating point."""
        A, B, C, D = self.np_blocks()
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return (A @ Z + B) @ np.linalg.inv(C @ Z + D)

    def j(self, Z: np.ndarray) -> np.ndarray:
        _, _, C, D = self.np_blocks()
        return C @ np.atleast_2d(Z) + D


# ---------------------------------------------------------------- points


@dataclass(frozen=True)
class PointH:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if X.shape != Y.shape or X.shape[0] != X.shape[1]:
            raise ValueError("X and Y must be square of equal size")
        if not (np.allclose(X, X.T) and np.allclose(Y, Y.T)):
            raise ValueError("X and Y must be symmetric")
        ev = np.linalg.eigvalsh(Y)
        if ev.min() <= 1e-12 * max(1.0, ev.max()):
            raise NotPositiveDefiniteError("Im(Z) must be positive definite")

    @classmethod
    def from_complex(cls, Z) -> "PointH":
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return cls(Z.real.copy(), Z.imag.copy())

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y


# ---------------------------------------------------------------- Minkowski reduction


def _lagrange(y11, y12, y22, max_iter: int = 10000):
    """Gauss-Lagrange reduction of a binary form; works for Fractions and floats."""
    U = [[1, 0], [0, 1]]
    for _ in range(max_iter):
        q = round(y12 / y11)
        if q:
            # row2 <- row2 - q row1
            y22 = y22 - 2 * q * y12 + q * q * y11
            y12 = y12 - q * y11
            U[1] = [U[1][0] - q * U[0][0], U[1][1] - q * U[0][1]]
        if y22 < y11:
            y11, y22 = y22, y11
            U = [U[1], U[0]]
            continue
        break
    else:
        raise ReductionError("Lagrange reduction did not terminate")
    if y12 < 0:
        y12 = -y12
        U[1] = [-U[1][0], -U[1][1]]
    return y11, y12, y22, U


def minkowski_reduce(Y) -> tuple[SymMatQ, UnimodularMat]:
    """Return (Y_red, U) with Y_red = U Y tU Minkowski reduced.

    Exact for n <= 2.  For n >= 3 a greedy size-reduce-and-sort loop is used
    and an ``ApproximateReductionWarning`` is emitted.
    """
    Y = as_symmatq(Y)
    if not is_positive_definite(Y):
        raise NotPositiveDefiniteError("minkowski_reduce needs a positive definite matrix")
    n = Y.n
    if n == 1:
        return Y, UnimodularMat.identity(1)
    if n == 2:
        y11, y12, y22, U = _lagrange(Y[0, 0], Y[0, 1], Y[1, 1])
        Ured = UnimodularMat(tuple(tuple(r) for r in U))
        Yred = SymMatQ.from_rows([[y11, y12], [y12, y22]])
        assert Yred == Y.congruence(U)
        return Yred, Ured
    warnings.warn("greedy reduction for n >= 3 may be non-minimal", ApproximateReductionWarning)
    return _greedy_reduce(Y)


def _greedy_reduce(Y: SymMatQ):
    n = Y.n
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    A = [list(r) for r in Y.rows]
    for _ in range(1000):
        changed = False
        order = sorted(range(n), key=lambda i: A[i][i])
        if order != list(range(n)):
            A = [[A[i][j] for j in order] for i in order]
            U = [U[i] for i in order]
            changed = True
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                q = round(A[i][j] / A[j][j])
                if q:
                    # row/col i <- i - q j
                    for c in range(n):
                        A[i][c] -= q * A[j][c]
                    for r in range(n):
                        A[r][i] -= q * A[r][j]
                    U[i] = [U[i][c] - q * U[j][c] for c in range(n)]
                    changed = True
        if not changed:
            break
    else:
        raise ReductionError("greedy reduction did not stabilize")
    Yred = SymMatQ.from_rows(A)
    return Yred, UnimodularMat(tuple(tuple(r) for r in U))


def is_minkowski_reduced_2(Y) -> bool:
    Y = as_symmatq(Y)
    return 0 <= 2 * abs(Y[0, 1]) <= Y[0, 0] <= Y[1, 1]


def reduction_sandwich_margin(A, tol: float = 1e-9) -> float:
    """Smallest r >= 1 with A_D/r <= A <= r A_D, by bisection on exact PSD tests."""
    A = as_symmatq(A)
    if not is_positive_definite(A):
        raise NotPositiveDefiniteError("A must be positive definite")
    if A.n == 2 and not is_minkowski_reduced_2(A):
        warnings.warn("matrix is not Minkowski reduced", UserWarning)
    AD = A.diagonal_part()

    def ok(r: Fraction) -> bool:
        return is_positive_semidefinite(AD.scaled(r) - A) and is_positive_semidefinite(
            A - AD.scaled(1 / r)
        )

    lo, hi = Fraction(1), Fraction(2)
    if ok(lo):
        return 1.0
    while not ok(hi):
        lo, hi = hi, hi * 2
    tol_f = Fraction(tol)
    while hi - lo > tol_f:
        mid = (lo + hi) / 2
        # keep denominators small
        mid = mid.limit_denominator(10**12) if mid.denominator > 10**15 else mid
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


# ---------------------------------------------------------------- fundamental domain


def _sym_round(X: np.ndarray) -> np.ndarray:
    S = np.rint(X)
    return (S + S.T) / 2 if X.shape[0] > 1 else S


_DIRECTIONS = {
    (1, 0): [[1, 0], [0, 1]],
    (0, 1): [[0, 1], [1, 0]],
    (1, 1): [[1, 0], [1, 1]],
    (1, -1): [[1, 0], [-1, 1]],
}


def _inversion_matrices() -> list[SymplecticMat]:
    """Inversions used by the n = 2 height test.

    The classical list of boundary elements has all block entries in {-1,0,1}.
    We take a superset: the embedded (0,-1;1,d) along the four shortest
    primitive directions v (so |det(CZ+D)| = |v Z tv + d|) and the pairs
    C = 1, D = S for every symmetric S with entries in {-1,0,1}.
    """
    zero = [[0, 0], [0, 0]]
    mats = []
    for V in _DIRECTIONS.values():
        Vn = np.array(V)
        Vi = np.rint(np.linalg.inv(Vn)).astype(int)
        # conj by Z -> tV Z V, whose (1,1) entry is v Z tv
        right = SymplecticMat.from_blocks(Vn.T.tolist(), zero, zero, Vi.tolist())
        left = SymplecticMat.from_blocks(Vi.T.tolist(), zero, zero, Vn.tolist())
        for d in (-1, 0, 1):
            g = SymplecticMat.from_blocks([[0, 0], [0, 1]], [[-1, 0], [0, 0]], [[1, 0], [0, 0]], [[d, 0], [0, 1]])
            mats.append(left @ g @ right)
    for a, b, c in product((-1, 0, 1), repeat=3):
        mats.append(SymplecticMat.from_blocks([[0, 0], [0, 0]], [[-1, 0], [0, -1]], [[1, 0], [0, 1]], [[a, b], [b, c]]))
    for m in mats:
        assert m.is_similitude()
    return mats


_INVERSIONS: list[SymplecticMat] | None = None


def inversion_generators() -> list[SymplecticMat]:
    global _INVERSIONS
    if _INVERSIONS is None:
        _INVERSIONS = _inversion_matrices()
    return _INVERSIONS


def im_of_action_formula(M: SymplecticMat, Z: np.ndarray) -> np.ndarray:
    """Im(M<Z>) = t(CZ+D)^-1 Y conj(CZ+D)^-1, for mu = 1."""
    Z = np.atleast_2d(Z)
    J = M.j(Z)
    Ji = np.linalg.inv(J)
    return (Ji.T @ Z.imag @ np.conj(Ji)).real


def reduce_to_fundamental(
    Z: PointH, tol: float = 1e-12, max_iter: int = 1000
) -> tuple[PointH, SymplecticMat]:
    """Move Z into the fundamental domain; returns (Z', gamma) with Z' = gamma<Z>."""
    n = Z.n
    if n == 1:
        return _reduce_n1(Z, tol, max_iter)
    if n == 2:
        return _reduce_n2(Z, tol, max_iter)
    raise ValueError("reduce_to_fundamental supports n in {1, 2}")


def _reduce_n1(Z: PointH, tol: float, max_iter: int):
    z = complex(Z.Z[0, 0])
    g = [[1, 0], [0, 1]]
    for _ in range(max_iter):
        s = round(z.real)
        if s:
            z -= s
            g = _int_matmul([[1, -s], [0, 1]], g)
        if abs(z) < 1 - tol:
            z = -1 / z
            g = _int_matmul([[0, -1], [1, 0]], g)
            continue
        break
    else:
        raise ReductionError("reduction did not stabilize")
    gamma = SymplecticMat(tuple(tuple(r) for r in g))
    return PointH.from_complex([[z]]), gamma


def _reduce_n2(Z: PointH, tol: float, max_iter: int):
    Zc = Z.Z.copy()
    g = SymplecticMat.identity(2)
    gens = inversion_generators()
    for _ in range(max_iter):
        Y = Zc.imag
        y11, y12, y22, U = _lagrange(Y[0, 0], Y[0, 1], Y[1, 1])
        Un = np.array(U)
        if not np.array_equal(Un, np.eye(2, dtype=int)):
            Ui = np.rint(np.linalg.inv(Un)).astype(int)
            gu = SymplecticMat.from_blocks(U, [[0, 0], [0, 0]], [[0, 0], [0, 0]], Ui.T.tolist())
            Zc = Un @ Zc @ Un.T
            g = gu @ g
        S = _sym_round(Zc.real).astype(int)
        if np.any(S):
            gt = SymplecticMat.from_blocks([[1, 0], [0, 1]], (-S).tolist(), [[0, 0], [0, 0]], [[1, 0], [0, 1]])
            Zc = Zc - S
            g = gt @ g
        Zc = (Zc + Zc.T) / 2
        best, best_val = None, 1 - tol
        for m in gens:
            val = abs(np.linalg.det(m.j(Zc)))
            if val < best_val:
                best, best_val = m, val
        if best is None:
            break
        Zc = best.act(Zc)
        Zc = (Zc + Zc.T) / 2
        g = best @ g
    else:
        raise ReductionError("reduction did not stabilize")
    return PointH.from_complex(Zc), g


def standard_generators(n: int) -> list[SymplecticMat]:
    """Translations, GL_n rotations and the inversion J, together with their inverses."""
    if n == 1:
        gens = [((1, 1), (0, 1)), ((1, -1), (0, 1)), ((0, -1), (1, 0)), ((0, 1), (-1, 0))]
        return [SymplecticMat(tuple(tuple(r) for r in g)) for g in gens]
    if n != 2:
        raise ValueError("n must be 1 or 2")
    Z2 = [[0, 0], [0, 0]]
    I2 = [[1, 0], [0, 1]]
    out = []
    for S in ([[1, 0], [0, 0]], [[0, 0], [0, 1]], [[0, 1], [1, 0]]):
        for sgn in (1, -1):
            out.append(SymplecticMat.from_blocks(I2, [[sgn * x for x in r] for r in S], Z2, I2))
    for U, Uit in (
        ([[0, 1], [1, 0]], [[0, 1], [1, 0]]),
        ([[1, 1], [0, 1]], [[1, 0], [-1, 1]]),
        ([[1, -1], [0, 1]], [[1, 0], [1, 1]]),
    ):
        out.append(SymplecticMat.from_blocks(U, Z2, Z2, Uit))
    out.append(SymplecticMat.from_blocks(Z2, I2, [[-1, 0], [0, -1]], Z2))
    out.append(SymplecticMat.from_blocks(Z2, [[-1, 0], [0, -1]], I2, Z2))
    return out


def random_word(n: int, length: int, rng) -> SymplecticMat:
    gens = standard_generators(n)
    g = SymplecticMat.identity(n)
    for _ in range(length):
        g = g @ gens[int(rng.integers(len(gens)))]
    return g
