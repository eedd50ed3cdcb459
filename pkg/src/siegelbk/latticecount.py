"""Half-integral positive forms: enumeration, the spectral window set C_Y,
automorphs and the degree-two piecewise counting exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable

import numpy as np

from .symspace import SymMatQ, as_symmatq


class EnumerationBudgetError(RuntimeError):
    pass


DEFAULT_CAP = 10**7
EDGE_TOL = 1e-10


@dataclass(frozen=True, order=True)
class HalfIntegralForm:
    """T in Lambda_n, stored through 2T (upper triangle, row-major, integers)."""

    n: int
    twice: tuple[int, ...]

    def __post_init__(self):
        n = self.n
        if n not in (1, 2):
            raise ValueError("only n in {1, 2} is supported")
        if len(self.twice) != n * (n + 1) // 2:
            raise ValueError("wrong number of entries")
        diag = [self.twice[0]] if n == 1 else [self.twice[0], self.twice[2]]
        if any(d % 2 for d in diag):
            raise ValueError("diagonal entries of T must be integers")
        if not self.is_positive():
            raise ValueError("T must be positive definite")

    @classmethod
    def from_entries(cls, *entries) -> "HalfIntegralForm":
        """(t) for n = 1 or (t11, t12, t22) for n = 2; t12 may be a half-integer."""
        vals = [Fraction(x) for x in entries]
        twice = tuple(int(2 * v) for v in vals)
        if any(2 * v != t for v, t in zip(vals, twice)):
            raise ValueError("entries must be half-integers")
        n = 1 if len(vals) == 1 else 2
        return cls(n, twice)

    @classmethod
    def identity(cls, n: int) -> "HalfIntegralForm":
        return cls(1, (2,)) if n == 1 else cls(2, (2, 0, 2))

    def is_positive(self) -> bool:
        if self.n == 1:
            return self.twice[0] > 0
        a, b, c = self.twice
        return a > 0 and a * c - b * b > 0

    def as_fraction_matrix(self) -> list[list[Fraction]]:
        if self.n == 1:
            return [[Fraction(self.twice[0], 2)]]
        a, b, c = self.twice
        return [[Fraction(a, 2), Fraction(b, 2)], [Fraction(b, 2), Fraction(c, 2)]]

    def to_symmatq(self) -> SymMatQ:
        return SymMatQ.from_rows(self.as_fraction_matrix())

    def matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.as_fraction_matrix()])

    def det(self) -> Fraction:
        if self.n == 1:
            return Fraction(self.twice[0], 2)
        a, b, c = self.twice
        return Fraction(a * c - b * b, 4)

    def trace_with(self, Y: np.ndarray) -> float:
        return float(np.trace(self.matrix() @ np.atleast_2d(Y)))

    def __str__(self) -> str:
        return " ".join(str(x) for x in self.to_symmatq().upper())


@dataclass(frozen=True)
class WindowSpec:
    k: int
    eps: float = 0.25
    c_window: float = 1.0

    def __post_init__(self):
        if self.k < 4 or self.k % 2:
            raise ValueError("k must be an even integer >= 4")
        if self.c_window <= 0:
            raise ValueError("c_window must be positive")
        if not 0 < self.eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")

    @property
    def center(self) -> float:
        return self.k / (4 * math.pi)

    @property
    def kappa(self) -> float:
        return self.c_window * self.k ** (0.5 + self.eps)

    @property
    def lo(self) -> float:
        return self.center - self.kappa

    @property
    def hi(self) -> float:
        return self.center + self.kappa


def _as_float_matrix(Y) -> np.ndarray:
    if isinstance(Y, SymMatQ):
        return Y.to_numpy()
    arr = np.atleast_2d(np.asarray(Y, dtype=float))
    if not np.allclose(arr, arr.T):
        raise ValueError("Y must be symmetric")
    if np.linalg.eigvalsh(arr).min() <= 0:
        raise ValueError("Y must be positive definite")
    return arr


def _box_n2(bound11: float, bound22: float, cap: int):
    """All (2t11, 2t12, 2t22) with t_ii <= bound_ii and 4 t11 t22 > (2t12)^2."""
    N1 = int(math.floor(bound11 + 1e-12))
    N2 = int(math.floor(bound22 + 1e-12))
    predicted = N1 * N2 * (4 * math.isqrt(max(N1 * N2, 0)) + 1)
    if predicted > cap:
        raise EnumerationBudgetError(f"predicted {predicted} candidate forms exceeds cap {cap}")
    out = []
    for t11 in range(1, N1 + 1):
        for t22 in range(1, N2 + 1):
            lim = 4 * t11 * t22
            bmax = math.isqrt(lim - 1)
            for b in range(-bmax, bmax + 1):
                out.append((2 * t11, b, 2 * t22))
    return out


def enumerate_forms(n: int, Y, B: float, cap: int = DEFAULT_CAP) -> list[HalfIntegralForm]:
    """All T in Lambda_n with tr(TY) <= B, sorted.

    Completeness: for T >= 0, t_ii <= lambda_max(Y^1/2 T Y^1/2) (Y^-1)_ii <= tr(TY) (Y^-1)_ii,
    and positivity forces |2 t12| < 2 sqrt(t11 t22).
    """
    Yf = _as_float_matrix(Y)
    if Yf.shape != (n, n):
        raise ValueError("Y has the wrong size")
    if B <= 0:
        return []
    if n == 1:
        top = int(math.floor(B / Yf[0, 0] + 1e-12))
        if top > cap:
            raise EnumerationBudgetError(f"{top} forms exceeds cap {cap}")
        return [HalfIntegralForm(1, (2 * t,)) for t in range(1, top + 1) if t * Yf[0, 0] <= B * (1 + 1e-14)]
    Yi = np.linalg.inv(Yf)
    cands = _box_n2(B * Yi[0, 0], B * Yi[1, 1], cap)
    if not cands:
        return []
    arr = np.array(cands, dtype=float)
    tr = (arr[:, 0] * Yf[0, 0] + 2 * arr[:, 1] * Yf[0, 1] + arr[:, 2] * Yf[1, 1]) / 2
    keep = tr <= B * (1 + 1e-14)
    return sorted(HalfIntegralForm(2, c) for c, ok in zip(cands, keep) if ok)


def _eigs_TY(forms_twice: np.ndarray, Yf: np.ndarray) -> np.ndarray:
    """Eigenvalues of TY for a batch of 2x2 forms, from trace and determinant."""
    a, b, c = forms_twice[:, 0] / 2, forms_twice[:, 1] / 2, forms_twice[:, 2] / 2
    tr = a * Yf[0, 0] + 2 * b * Yf[0, 1] + c * Yf[1, 1]
    det = (a * c - b * b) * np.linalg.det(Yf)
    disc = np.sqrt(np.maximum(tr * tr - 4 * det, 0.0))
    return np.stack([(tr - disc) / 2, (tr + disc) / 2], axis=1)


def _in_window(eigs: np.ndarray, w: WindowSpec):
    inside = np.all((eigs >= w.lo - EDGE_TOL) & (eigs <= w.hi + EDGE_TOL), axis=1)
    strict = np.all((eigs >= w.lo + EDGE_TOL) & (eigs <= w.hi - EDGE_TOL), axis=1)
    return inside, inside & ~strict


def cy_set(Y, w: WindowSpec, cap: int = DEFAULT_CAP, return_borderline: bool = False):
    """T in Lambda_n whose TY-eigenvalues lie in [k/4pi - kappa, k/4pi + kappa].

    Members within 1e-10 of the window edge are included; with
    ``return_borderline`` their count is returned as well.
    """
    Yf = _as_float_matrix(Y)
    n = Yf.shape[0]
    if w.hi <= 0:
        return ([], 0) if return_borderline else []
    forms = enumerate_forms(n, Yf, n * w.hi * (1 + 1e-12), cap)
    if not forms:
        return ([], 0) if return_borderline else []
    if n == 1:
        eigs = np.array([[f.twice[0] / 2 * Yf[0, 0]] for f in forms])
    else:
        eigs = _eigs_TY(np.array([f.twice for f in forms], dtype=float), Yf)
    inside, border = _in_window(eigs, w)
    out = [f for f, ok in zip(forms, inside) if ok]
    if return_borderline:
        return out, int(border.sum())
    return out


def cy_set_direct(Y, w: WindowSpec, cap: int = DEFAULT_CAP) -> list[HalfIntegralForm]:
    """Second enumeration route: box from T <= Lambda Y^-1, then eigvalsh of Y^1/2 T Y^1/2."""
    Yf = _as_float_matrix(Y)
    n = Yf.shape[0]
    lam = w.hi
    if lam <= 0:
        return []
    Yi = np.linalg.inv(Yf)
    ev, V = np.linalg.eigh(Yf)
    R = V @ np.diag(np.sqrt(ev)) @ V.T
    out = []
    if n == 1:
        for t in range(1, int(math.floor(lam * Yi[0, 0] + 1e-9)) + 1):
            x = t * Yf[0, 0]
            if w.lo - EDGE_TOL <= x <= w.hi + EDGE_TOL:
                out.append(HalfIntegralForm(1, (2 * t,)))
        return out
    for c in _box_n2(lam * Yi[0, 0], lam * Yi[1, 1], cap):
        T = np.array([[c[0] / 2, c[1] / 2], [c[1] / 2, c[2] / 2]])
        e = np.linalg.eigvalsh(R @ T @ R)
        if e[0] >= w.lo - EDGE_TOL and e[1] <= w.hi + EDGE_TOL:
            out.append(HalfIntegralForm(2, c))
    return sorted(out)


def _short_vectors(T2: list[list[int]], target2: int):
    """Integer u with u (2T) tu = target2, using a box from (T^-1)_jj."""
    n = len(T2)
    Tf = np.array(T2, dtype=float) / 2
    Ti = np.linalg.inv(Tf)
    bounds = [int(math.floor(math.sqrt(target2 / 2 * Ti[j, j]) + 1e-9)) for j in range(n)]
    vecs = []
    for u in product(*[range(-b, b + 1) for b in bounds]):
        val = sum(u[i] * T2[i][j] * u[j] for i in range(n) for j in range(n))
        if val == target2:
            vecs.append(u)
    return vecs


def automorph_count(T: HalfIntegralForm) -> int:
    """#{U in GL_n(Z) : U T tU = T}."""
    n = T.n
    if n == 1:
        return 2
    a, b, c = T.twice
    T2 = [[a, b], [b, c]]
    rows1 = _short_vectors(T2, a)
    rows2 = _short_vectors(T2, c)
    count = 0
    for u in rows1:
        for v in rows2:
            det = u[0] * v[1] - u[1] * v[0]
            if abs(det) != 1:
                continue
            cross = u[0] * (T2[0][0] * v[0] + T2[0][1] * v[1]) + u[1] * (T2[1][0] * v[0] + T2[1][1] * v[1])
            if cross == b:
                count += 1
    return count


# ---------------------------------------------------------------- n = 2 exponents

_W1_PIECES = [
    (Fraction(0), Fraction(1, 2), Fraction(3, 2), Fraction(-3, 2)),
    (Fraction(1, 2), Fraction(1), Fraction(1), Fraction(-1, 2)),
    (Fraction(1), Fraction(3, 2), Fraction(3, 2), Fraction(-1)),
    (Fraction(3, 2), Fraction(2), Fraction(0), Fraction(0)),
]

_W2_PIECES = [
    (Fraction(0), Fraction(1, 2), Fraction(35, 12), Fraction(-5, 4)),
    (Fraction(1, 2), Fraction(1), Fraction(29, 12), Fraction(-1, 4)),
    (Fraction(1), Fraction(4, 3), Fraction(35, 12), Fraction(-3, 4)),
    (Fraction(4, 3), Fraction(3, 2), Fraction(9, 4), Fraction(-1, 4)),
    (Fraction(3, 2), Fraction(2), Fraction(3, 4), Fraction(3, 4)),
]


def _eval_pieces(pieces, eta: Fraction, side: str = "left") -> Fraction:
    # at a breakpoint "left" uses the piece ending there, "right" the one starting there
    for lo, hi, c0, c1 in pieces:
        if side == "left" and lo <= eta <= hi and not (eta == lo and lo != 0):
            return c0 + c1 * eta
        if side == "right" and lo <= eta <= hi and not (eta == hi and hi != 2):
            return c0 + c1 * eta
    raise ValueError("eta outside [0, 2]")


def _check_eta(eta):
    eta_q = Fraction(eta) if not isinstance(eta, float) else Fraction(eta).limit_denominator(10**9)
    if not 0 <= eta_q <= 2:
        raise ValueError("eta must lie in [0, 2]")
    return eta_q


def piecewise_exponents(eta) -> tuple[Fraction, Fraction]:
    """epsilon-free exponents (w1, w2) at eta = log_k det Y for n = 2."""
    e = _check_eta(eta)
    return _eval_pieces(_W1_PIECES, e), _eval_pieces(_W2_PIECES, e)


def w1_breakpoints() -> list[Fraction]:
    return [p[1] for p in _W1_PIECES[:-1]]


def w2_breakpoints() -> list[Fraction]:
    return [p[1] for p in _W2_PIECES[:-1]]


def continuity_defects() -> dict[str, list[Fraction]]:
    """Jump of w1, w2 at each interior breakpoint (all zero when continuous)."""
    return {
        "w1": [_eval_pieces(_W1_PIECES, b, "right") - _eval_pieces(_W1_PIECES, b, "left") for b in w1_breakpoints()],
        "w2": [_eval_pieces(_W2_PIECES, b, "right") - _eval_pieces(_W2_PIECES, b, "left") for b in w2_breakpoints()],
    }


def w2_from_w1(eta) -> Fraction:
    """w1 + 1/2 + max(1/4 + 3 eta/4, 11/12 + eta/4), the composition behind w2."""
    e = _check_eta(eta)
    w1, _ = piecewise_exponents(e)
    return w1 + Fraction(1, 2) + max(Fraction(1, 4) + 3 * e / 4, Fraction(11, 12) + e / 4)


def budget_maximum() -> tuple[Fraction, list[Fraction]]:
    """max over eta in [0,2] of min(3 + 9 eta/4, 2 w2(eta)), with all maximizers.

    Both functions are piecewise linear, so the maximum of the minimum is attained
    at a breakpoint of w2 or at a crossing point inside a piece.
    """
    line = (Fraction(3), Fraction(9, 4))
    cands = {Fraction(0), Fraction(2), *w2_breakpoints()}
    for lo, hi, c0, c1 in _W2_PIECES:
        # 3 + 9e/4 = 2 c0 + 2 c1 e
        den = line[1] - 2 * c1
        if den != 0:
            x = (2 * c0 - line[0]) / den
            if lo <= x <= hi:
                cands.add(x)
    vals = {}
    for x in sorted(cands):
        w2 = min(_eval_pieces(_W2_PIECES, x, "left"), _eval_pieces(_W2_PIECES, x, "right"))
        vals[x] = min(line[0] + line[1] * x, 2 * w2)
    best = max(vals.values())
    return best, [x for x, v in vals.items() if v == best]


def count_exponent_fit(samples: Iterable[tuple[float, int]]) -> float:
    """log-log slope of counts versus k, ignoring zero counts."""
    from .numerics import fit_loglog_slope

    pts = [(k, c) for k, c in samples if c > 0]
    return fit_loglog_slope(pts)
