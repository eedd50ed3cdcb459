"""The Bergman kernel of S_k(Sp(2n, Z)) for n = 1, 2 from its automorphy sum.

B_k(Z, W) = 1/2 a(n,k) (2i)^{nk} sum_gamma det(C W* + D)^{-k} det(Z - gamma<W*>)^{-k}

with W* the complex conjugate.  Writing gamma = t_S u_U g over a class
representative g of each coprime symmetric pair {C, D}, the sum over the
translations S is replaced by its Lipschitz (Fourier) side, which converges
geometrically because Im(Z - U g<W*> tU) >= Im Z.  The 1/2 is absorbed by
summing U over GL_n(Z)/{+-1}, which is legitimate for even k.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from . import intmat
from .latticecount import enumerate_forms
from .numerics import log_gamma
from .symspace import PointH, SymplecticMat


class KernelBudgetError(RuntimeError):
    pass


class TailQuality(enum.Enum):
    CERTIFIED = "certified"
    HEURISTIC = "heuristic"


@dataclass(frozen=True)
class KernelEstimate:
    value: complex | float
    height_cutoff: float
    n_terms: int
    tail_quality: TailQuality
    tail_estimate: float


@dataclass(frozen=True)
class CoprimePair:
    C: tuple[tuple[int, ...], ...]
    D: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not intmat.is_coprime_symmetric(self.C, self.D):
            raise ValueError("not a coprime symmetric pair")

    @property
    def n(self) -> int:
        return len(self.C)

    def completion(self) -> SymplecticMat:
        A, B = intmat.complete_pair(self.C, self.D)
        return SymplecticMat.from_blocks(A, B, [list(r) for r in self.C], [list(r) for r in self.D])

    def key(self) -> tuple:
        return intmat.hnf_key([list(c) + list(d) for c, d in zip(self.C, self.D)])

    def jdet(self, Z: np.ndarray) -> complex:
        C = np.array(self.C, dtype=float)
        D = np.array(self.D, dtype=float)
        return complex(np.linalg.det(C @ np.atleast_2d(Z) + D))


@dataclass(frozen=True)
class Truncation:
    """tol: relative size below which cosets / U / T terms are dropped.

    H and U_norm_bound override the tolerance-derived cutoffs; H_max caps the
    coset height (degree two enumeration cost grows quickly with H).
    """

    tol: float = 1e-14
    H: float | None = None
    U_norm_bound: int | None = None
    H_max: float = 6.0


DEFAULT_TRUNC = Truncation()


# ---------------------------------------------------------------- constants


def log_a_nk(n: int, k: int) -> float:
    args = [k - (v + n) / 2 for v in range(1, n + 1)] + [k - (v - 1) / 2 for v in range(1, n + 1)]
    if min(args) <= 0:
        raise ValueError(f"a(n,k) has a pole: Gamma argument {min(args)} <= 0")
    val = -n * (n + 3) / 2 * math.log(2) - n * (n + 1) / 2 * math.log(math.pi)
    for v in range(1, n + 1):
        val += float(log_gamma(k - (v - 1) / 2)) - float(log_gamma(k - (v + n) / 2))
    return val


def a_nk(n: int, k: int) -> float:
    """2^{-n(n+3)/2} pi^{-n(n+1)/2} prod_v Gamma(k-(v-1)/2)/Gamma(k-(v+n)/2)."""
    return math.exp(log_a_nk(n, k))


def lipschitz_log_prefactor(n: int, k: int) -> tuple[float, complex]:
    """(log |C_n / gamma_{n,k}|, phase e^{-pi i n k/2}) of the Lipschitz identity."""
    log_c = -n * (n - 1) / 2 * math.log(2 * math.sqrt(math.pi))
    log_inv_gamma = n * k * math.log(2 * math.pi) - sum(float(log_gamma(k - v / 2)) for v in range(n))
    phase = complex(np.exp(-1j * math.pi * n * k / 2))
    return log_c + log_inv_gamma, phase


# ---------------------------------------------------------------- h factor


def h_factor(gamma: SymplecticMat, Z: PointH, check: bool = True) -> complex:
    """h(Z) = det Y / det((Z(C Z* + D) - (A Z* + B)) / 2i)."""
    A, B, C, D = gamma.np_blocks()
    Zc = Z.Z
    Zb = np.conj(Zc)
    M = Zc @ (C @ Zb + D) - (A @ Zb + B)
    den = np.linalg.det(M / 2j)
    if abs(den) == 0:
        raise ZeroDivisionError("singular denominator: gamma is not symplectic?")
    h = complex(np.linalg.det(Z.Y) / den)
    if check and abs(h) > 1 + 1e-9:
        raise AssertionError(f"|h| = {abs(h)} > 1")
    return h


class GaussQ:
    """Gaussian rational re + i im with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, o):
        o = _gq(o)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = _gq(o)
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return _gq(o) - self

    def __mul__(self, o):
        o = _gq(o)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self):
        return GaussQ(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, o):
        o = _gq(o)
        n = o.norm2()
        p = self * o.conj()
        return GaussQ(p.re / n, p.im / n)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, o):
        o = _gq(o)
        return self.re == o.re and self.im == o.im

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"


def _gq(x) -> GaussQ:
    return x if isinstance(x, GaussQ) else GaussQ(x)


def _gq_matmul(A, B):
    return [[sum((A[i][l] * B[l][j] for l in range(len(B))), GaussQ(0)) for j in range(len(B[0]))] for i in range(len(A))]


def _gq_det(M) -> GaussQ:
    if len(M) == 1:
        return M[0][0]
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def h_factor_exact(gamma: SymplecticMat, X, Y) -> tuple[GaussQ, bool]:
    """Exact h for integer gamma and rational Z = X + iY; also returns |h| <= 1."""
    n = gamma.n
    Xq = [[Fraction(v) for v in r] for r in np.asarray(X, dtype=object).reshape(n, n).tolist()]
    Yq = [[Fraction(v) for v in r] for r in np.asarray(Y, dtype=object).reshape(n, n).tolist()]
    Zq = [[GaussQ(Xq[i][j], Yq[i][j]) for j in range(n)] for i in range(n)]
    Zb = [[z.conj() for z in r] for r in Zq]
    A, B, C, D = ([[GaussQ(v) for v in r] for r in blk] for blk in gamma.blocks())
    CZ = _gq_matmul(C, Zb)
    CZD = [[CZ[i][j] + D[i][j] for j in range(n)] for i in range(n)]
    AZ = _gq_matmul(A, Zb)
    AZB = [[AZ[i][j] + B[i][j] for j in range(n)] for i in range(n)]
    ZM = _gq_matmul(Zq, CZD)
    M = [[ZM[i][j] - AZB[i][j] for j in range(n)] for i in range(n)]
    # det(M / 2i) = det(M) / (2i)^n
    detM = _gq_det(M)
    scale = GaussQ(1)
    for _ in range(n):
        scale = scale * GaussQ(0, 2)
    den = detM / scale
    if den.norm2() == 0:
        raise ZeroDivisionError("singular denominator")
    detY = Yq[0][0] if n == 1 else Yq[0][0] * Yq[1][1] - Yq[0][1] * Yq[1][0]
    h = GaussQ(detY) / den
    return h, h.norm2() <= 1


# ---------------------------------------------------------------- Lipschitz identity


def _t_cutoff(k: int, n: int, tol: float) -> float:
    """s = tr(TY) beyond which det(T)^{k-(n+1)/2} e^{-2 pi s} (with polynomial count) is negligible."""
    p = n * (k - (n + 1) / 2)
    f = lambda s: p * math.log(s / n) - 2 * math.pi * s + (n * (n + 1) / 2 + 1) * math.log(s)
    s0 = max(p / (2 * math.pi), 1.0)
    target = f(s0) - math.log(1 / tol) - 5
    s = s0
    while f(s) > target:
        s *= 1.05
    return s


def _tsum_n1(Zp: np.ndarray, k: int, tmax: int) -> np.ndarray:
    """sum_{t=1}^{tmax} t^{k-1} e(t Z') elementwise."""
    q = np.exp(2j * np.pi * Zp)
    acc = np.zeros_like(q)
    qt = np.ones_like(q)
    for t in range(1, tmax + 1):
        qt = qt * q
        acc += float(t) ** (k - 1) * qt
    return acc


@lru_cache(maxsize=64)
def _forms_table(k: int, y11: float, y12: float, y22: float, tol: float):
    Y = np.array([[y11, y12], [y12, y22]])
    s_max = _t_cutoff(k, 2, tol)
    forms = enumerate_forms(2, Y, s_max)
    tw = np.array([f.twice for f in forms], dtype=float)
    logdet = (k - 1.5) * np.log((tw[:, 0] * tw[:, 2] - tw[:, 1] ** 2) / 4)
    return tw, logdet


def _tsum_n2(Zp: np.ndarray, k: int, Ylow: np.ndarray, tol: float) -> np.ndarray:
    """sum_T det(T)^{k-3/2} e(tr T Z') for a batch Zp of shape (m, 2, 2) with Im Zp >= Ylow."""
    tw, logdet = _forms_table(k, float(Ylow[0, 0]), float(Ylow[0, 1]), float(Ylow[1, 1]), tol)
    tr = np.outer(Zp[:, 0, 0], tw[:, 0] / 2) + np.outer(Zp[:, 0, 1], tw[:, 1]) + np.outer(Zp[:, 1, 1], tw[:, 2] / 2)
    return np.exp(logdet[None, :] + 2j * np.pi * tr).sum(axis=1)


def lipschitz_series(Z: PointH, k: int, side: str = "fourier", tol: float = 1e-16, box: int | None = None) -> complex:
    """sum_{S in Sym_n(Z)} det(Z + S)^{-k}, summed directly or through its Fourier side."""
    n = Z.n
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if k <= n * (n + 1) / 2:
        raise ValueError("k too small for the Lipschitz identity")
    Zc = Z.Z
    if side == "fourier":
        logp, phase = lipschitz_log_prefactor(n, k)
        if n == 1:
            y = Zc[0, 0].imag
            tmax = int(math.ceil(_t_cutoff(k, 1, tol) / y)) + 1
            s = _tsum_n1(np.array([Zc[0, 0]]), k, tmax)[0]
        else:
            s = _tsum_n2(Zc[None, :, :], k, Z.Y, tol)[0]
        return complex(phase * np.exp(logp) * s)
    if side != "direct":
        raise ValueError("side must be 'direct' or 'fourier'")
    if k < n + 2:
        raise ValueError("direct side needs k >= n + 2")
    if n == 1:
        M = box or int(math.ceil(10 ** (15 / (k - 1)))) + 5
        m = np.arange(-M, M + 1)
        return complex(np.sum((Zc[0, 0] + m) ** (-k)))
    M = box or int(math.ceil(10 ** (12 / (k - 3)))) + 5
    r = np.arange(-M, M + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    total = 0j
    for c in r:
        det = (Zc[0, 0] + a) * (Zc[1, 1] + c) - (Zc[0, 1] + b) ** 2
        total += np.sum(det ** (-k))
    return complex(total)


# ---------------------------------------------------------------- coset enumeration


def _pairs_n1(x_lo: float, x_hi: float, y_min: float, H: float) -> list[tuple[int, int]]:
    """(c, d) up to sign with gcd 1 and |c w + d| <= H for some w in the strip."""
    out = [(0, 1)]
    cmax = int(math.floor(H / y_min))
    for c in range(1, cmax + 1):
        lo = int(math.floor(-c * x_hi - H)) - 1
        hi = int(math.ceil(-c * x_lo + H)) + 1
        for d in range(lo, hi + 1):
            if math.gcd(c, d) == 1:
                out.append((c, d))
    return out


def _gram_4(Z: np.ndarray) -> np.ndarray:
    X, Y = Z.real, Z.imag
    Yi = np.linalg.inv(Y)
    return np.block([[X @ Yi @ X + Y, X @ Yi], [Yi @ X, Yi]])


def _lattice_points(G: np.ndarray, R: float) -> np.ndarray:
    """Nonzero integer v with v G tv <= R (box from the diagonal of G^-1)."""
    Gi = np.linalg.inv(G)
    bounds = [int(math.floor(math.sqrt(R * Gi[i, i]) + 1e-9)) for i in range(G.shape[0])]
    if np.prod([2 * b + 1 for b in bounds]) > 5 * 10**7:
        raise KernelBudgetError("coset enumeration box too large; lower H")
    axes = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, G.shape[0])
    q = np.einsum("ij,jk,ik->i", grid, G, grid)
    keep = (q <= R * (1 + 1e-12)) & np.any(grid != 0, axis=1)
    return grid[keep].astype(np.int64), q[keep]


def enumerate_coprime_pairs(n: int, Z: PointH, H: float) -> list[CoprimePair]:
    """One pair per GL_n(Z)-class with |det(CZ + D)| <= H (the class of (0, 1) always included).

    n = 2: take the class member whose M = (CZ+D) Y^-1 (CZ+D)* is Minkowski
    reduced.  Its diagonal entries are q(row_i) for the quadratic form G of
    _gram_4, with q(row_1) q(row_2) <= (4/3) det M = (4/3)|det(CZ+D)|^2/det Y,
    so both rows lie in an explicit ellipsoid.
    """
    Zc = Z.Z
    if n == 1:
        z = Zc[0, 0]
        raw = _pairs_n1(z.real, z.real, z.imag, H)
        return [CoprimePair(((c,),), ((d,),)) for c, d in raw if abs(c * z + d) <= H * (1 + 1e-12)]
    if n != 2:
        raise ValueError("n must be 1 or 2")
    detY = float(np.linalg.det(Z.Y))
    G = _gram_4(Zc)
    mu = float(np.linalg.eigvalsh(G)[0])
    detM_bound = H * H / detY
    R2 = 4 / 3 * detM_bound / mu
    R1 = math.sqrt(4 / 3 * detM_bound)
    pts, q = _lattice_points(G, max(R1, R2))
    # v1 up to sign
    first = np.array([next((x for x in v if x != 0), 0) for v in pts])
    v1_mask = (q <= R1 * (1 + 1e-12)) & (first > 0)
    seen: dict[tuple, CoprimePair] = {}
    ident = CoprimePair(((0, 0), (0, 0)), ((1, 0), (0, 1)))
    seen[ident.key()] = ident
    for v1, q1 in zip(pts[v1_mask], q[v1_mask]):
        lim = 4 / 3 * detM_bound / q1
        omega = v1[0] * pts[:, 2] + v1[1] * pts[:, 3] - v1[2] * pts[:, 0] - v1[3] * pts[:, 1]
        cand = pts[(omega == 0) & (q >= q1 * (1 - 1e-12)) & (q <= lim * (1 + 1e-12))]
        for v2 in cand:
            rows = [[int(x) for x in v1], [int(x) for x in v2]]
            if intmat.minors_gcd_2xN(rows) != 1:
                continue
            C = ((rows[0][0], rows[0][1]), (rows[1][0], rows[1][1]))
            D = ((rows[0][2], rows[0][3]), (rows[1][2], rows[1][3]))
            pair = CoprimePair(C, D)
            key = pair.key()
            if key in seen:
                continue
            if abs(pair.jdet(Zc)) <= H * (1 + 1e-12):
                seen[key] = pair
    return [seen[k] for k in sorted(seen)]


@lru_cache(maxsize=16)
def _unimodular_table(max_norm2: int) -> np.ndarray:
    """GL_2(Z) modulo +-1 with ||U||_F^2 <= max_norm2, sorted by norm.

    Rows are generated directly: a primitive first row (a, b) and, for each
    sign of the determinant, the line of second rows (c0, d0) + t (a, b).
    """
    out = []
    rmax = math.isqrt(max_norm2)
    for a in range(-rmax, rmax + 1):
        for b in range(-rmax, rmax + 1):
            n1 = a * a + b * b
            if n1 == 0 or n1 >= max_norm2 or math.gcd(a, b) != 1:
                continue
            if next(x for x in (a, b) if x != 0) < 0:
                continue
            g, x, y = _egcd(a, b)  # x a + y b = 1
            for sgn in (1, -1):
                # a d - b c = sgn: (c, d) = sgn (-y, x) + t (a, b)
                c0, d0 = -sgn * y, sgn * x
                # minimize |(c0, d0) + t (a, b)|
                t0 = -round((c0 * a + d0 * b) / n1)
                rest = max_norm2 - n1
                t = t0
                while True:
                    c, d = c0 + t * a, d0 + t * b
                    if c * c + d * d > rest:
                        break
                    out.append((a, b, c, d))
                    t += 1
                t = t0 - 1
                while True:
                    c, d = c0 + t * a, d0 + t * b
                    if c * c + d * d > rest:
                        break
                    out.append((a, b, c, d))
                    t -= 1
    out = sorted(set(out), key=lambda u: (sum(v * v for v in u), u))
    return np.array(out, dtype=float).reshape(-1, 2, 2)


def _u_norm_needed(k: int, Yz: np.ndarray, Yt: np.ndarray, log_lead: float, tol: float) -> int:
    """||U||^2 beyond which (1 + lmin(Yt) ||U||^2 / lmax(Yz))^{-(k-3/2)} e^{log_lead} < tol."""
    lmin = float(np.linalg.eigvalsh(Yt)[0])
    lmax = float(np.linalg.eigvalsh(Yz)[-1])
    room = (log_lead - math.log(tol)) / (k - 1.5)
    if room <= 0:
        return 1
    rho = math.expm1(room)
    return max(2, int(math.ceil(rho * lmax / max(lmin, 1e-300))))


# ---------------------------------------------------------------- kernel, n = 1


def _L_profile(k: int, V: float, tmax: int = 4000) -> float:
    t = np.arange(1, tmax + 1, dtype=float)
    logs = (k - 1) * np.log(t) - 2 * np.pi * t * V
    top = logs.max()
    return math.exp(top) * float(np.exp(logs - top).sum())


def _height_n1(k: int, yz: float, yw: float, tol: float) -> float:
    # a coset with |cw+d| = r contributes at most r^-k L(yz) against L(yz + yw)
    ratio = _L_profile(k, yz) / _L_profile(k, yz + yw)
    return max(1.0, (ratio / tol) ** (1 / k))


def _tail_n1(k: int, yz: float, yw: float, H: float) -> float:
    """Heuristic relative size of the omitted cosets |cw+d| > H."""
    ratio = _L_profile(k, yz) / _L_profile(k, yz + yw)
    tot = 0.0
    r = H
    for _ in range(60):
        R = 2 * r
        cnt = (R / yw + 1) * (2 * R + 1)
        tot += cnt * r ** (-k) * ratio
        r = R
    return tot


def _kernel_n1(z: np.ndarray, w: np.ndarray, k: int, trunc: Truncation, outer: bool):
    """B_k(z_i, w_i) (or the matrix B_k(z_i, w_j) with ``outer``)."""
    z = np.asarray(z, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex).ravel()
    yz, yw = float(z.imag.min()), float(w.imag.min())
    if yz <= 0 or yw <= 0:
        raise ValueError("points must lie in the upper half plane")
    H = trunc.H if trunc.H is not None else _height_n1(k, yz, yw, trunc.tol)
    pairs = _pairs_n1(float(w.real.min()), float(w.real.max()), yw, H)
    logc = (k - 1) * math.log(4 * math.pi) - float(log_gamma(k - 1))
    tmax = int(math.ceil(_t_cutoff(k, 1, trunc.tol) / yz)) + 1
    wb = np.conj(w)
    if outer:
        Zg = z[:, None]
        total = np.zeros((z.size, w.size), dtype=complex)
    else:
        if z.size != w.size:
            raise ValueError("z and w must have equal length")
        Zg = z
        total = np.zeros(z.size, dtype=complex)
    cd = np.array(pairs, dtype=np.int64)
    ab = np.array([_sl2_top(int(c), int(d)) for c, d in pairs], dtype=np.int64)
    chunk = max(1, int(2_000_000 // max(1, total.size)))
    for s in range(0, len(pairs), chunk):
        c = cd[s:s + chunk, 0].astype(float)
        d = cd[s:s + chunk, 1].astype(float)
        a = ab[s:s + chunk, 0].astype(float)
        b = ab[s:s + chunk, 1].astype(float)
        j = c[:, None] * wb[None, :] + d[:, None]            # (m, P_w)
        gw = (a[:, None] * wb[None, :] + b[:, None]) / j      # g<w*>
        jk = j ** (-k)
        if outer:
            Zp = Zg[None, :, :] - gw[:, None, :]               # (m, P_z, P_w)
            terms = _tsum_n1(Zp, k, tmax) * jk[:, None, :]
        else:
            Zp = Zg[None, :] - gw
            terms = _tsum_n1(Zp, k, tmax) * jk
        total += terms.sum(axis=0)
    value = math.exp(logc) * total
    rel_tail = _tail_n1(k, yz, yw, H)
    return value, H, len(pairs), rel_tail


def _sl2_top(c: int, d: int) -> tuple[int, int]:
    if c == 0:
        return (1, 0) if d == 1 else (-1, 0)
    # a d - b c = 1
    if d == 0:
        return (0, -1) if c == 1 else (0, 1)
    g, x, y = _egcd(d, c)
    # x d + y c = 1  ->  a = x, b = -y
    return x, -y


def _egcd(a: int, b: int):
    if b == 0:
        return (a, 1, 0) if a > 0 else (-a, -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


# ---------------------------------------------------------------- kernel, n = 2


def _n2_cosets(Yz: np.ndarray, W: np.ndarray, k: int, trunc: Truncation):
    """Coset data for B_k(., W) at imaginary part Yz.

    Returns (blocks, H, rel_tail, capped) with blocks a list of
    (jdet^{-k}, array of U g<W*> tU) over the retained terms.
    """
    Yw = W.imag
    tol = trunc.tol
    tw, logdet = _forms_table(k, float(Yz[0, 0]), float(Yz[0, 1]), float(Yz[1, 1]), tol)

    def L2(V):
        tr = (tw[:, 0] * V[0, 0] + 2 * tw[:, 1] * V[0, 1] + tw[:, 2] * V[1, 1]) / 2
        return float(np.exp(logdet - 2 * np.pi * tr).sum())

    ratio = L2(Yz) / L2(Yz + Yw)
    H = trunc.H if trunc.H is not None else max(1.0, (ratio / tol) ** (1 / k))
    quality_capped = False
    if H > trunc.H_max and trunc.H is None:
        H, quality_capped = trunc.H_max, True
    pairs = enumerate_coprime_pairs(2, PointH.from_complex(W), H)
    Wb = np.conj(W)
    ratio_det = float(np.linalg.det(Yz + Yw) / np.linalg.det(Yz))
    u_cap = trunc.U_norm_bound or 4000
    capped_u = False
    blocks = []
    dropped = 0.0
    for pair in pairs:
        g = pair.completion()
        A, B, C, D = g.np_blocks()
        J = C @ Wb + D
        jdet = np.linalg.det(J)
        Gw = (A @ Wb + B) @ np.linalg.inv(J)
        Gw = (Gw + Gw.T) / 2
        Yt = -Gw.imag
        log_lead = -k * math.log(abs(jdet)) + (k - 1.5) * math.log(ratio_det)
        need = _u_norm_needed(k, Yz, Yt, log_lead, tol)
        if need > u_cap:
            need, capped_u = u_cap, True
        Utab = _unimodular_table(_round_up_pow2(need))
        P = np.einsum("uij,jk,ulk->uil", Utab, Yt, Utab)
        # size proxy of each U-term against the identity term
        dets = np.linalg.det(Yz[None] + P)
        weight = abs(jdet) ** (-k) * (np.linalg.det(Yz + Yw) / dets) ** (k - 1.5)
        keep = weight >= tol
        dropped += float(weight[~keep].sum())
        if not keep.any():
            continue
        Us = Utab[keep]
        blocks.append((jdet ** (-k), np.einsum("uij,jk,ulk->uil", Us, Gw, Us)))
    # omitted classes: count in |det| <= R grows at most like R^4
    rel_tail = dropped + sum(ratio * (2 ** (j + 1) * H) ** 4 * (2**j * H) ** (-k) for j in range(40))
    return blocks, H, rel_tail, quality_capped or capped_u


def _n2_constant(k: int) -> complex:
    logp, phase = lipschitz_log_prefactor(2, k)
    return math.exp(log_a_nk(2, k) + logp) * phase * (2j) ** (2 * k)


def _kernel_n2(Z: np.ndarray, W: np.ndarray, k: int, trunc: Truncation):
    Yz = Z.imag
    blocks, H, rel_tail, capped = _n2_cosets(Yz, W, k, trunc)
    total = 0j
    n_terms = 0
    for jk, M in blocks:
        total += _tsum_n2(Z[None] - M, k, Yz, trunc.tol).sum() * jk
        n_terms += M.shape[0]
    return complex(_n2_constant(k) * total), H, n_terms, rel_tail, capped


def _kernel_n2_coefficients(W: np.ndarray, k: int, Y: np.ndarray, trunc: Truncation):
    """Fourier expansion in Z of B_k(Z, W) on Im Z = Y.

    Returns (forms, beta) with forms the (2t11, 2t12, 2t22) rows and
    B_k(Z, W) = sum beta_T e(tr T Z).
    """
    blocks, _, _, _ = _n2_cosets(Y, W, k, trunc)
    tw, logdet = _forms_table(k, float(Y[0, 0]), float(Y[0, 1]), float(Y[1, 1]), trunc.tol)
    beta = np.zeros(tw.shape[0], dtype=complex)
    for jk, M in blocks:
        tr = np.outer(tw[:, 0] / 2, M[:, 0, 0]) + np.outer(tw[:, 1], M[:, 0, 1]) + np.outer(tw[:, 2] / 2, M[:, 1, 1])
        beta += jk * np.exp(-2j * np.pi * tr).sum(axis=1)
    beta *= np.exp(logdet) * _n2_constant(k)
    return tw, beta


def _round_up_pow2(x: int) -> int:
    return 1 << max(1, (int(x) - 1).bit_length())


# ---------------------------------------------------------------- public kernel API


def kernel_offdiag(Z: PointH, W: PointH, k: int, trunc: Truncation = DEFAULT_TRUNC) -> KernelEstimate:
    """B_k(Z, W) (no det(Y)^k normalization)."""
    _check_weight(Z.n, k)
    if Z.n != W.n:
        raise ValueError("Z and W must have the same degree")
    if Z.n == 1:
        v, H, nt, rel = _kernel_n1(Z.Z[0, 0], W.Z[0, 0], k, trunc, outer=False)
        val = complex(v[0])
        scale = math.exp((k - 1) * math.log(4 * math.pi) - float(log_gamma(k - 1))) * _L_profile(
            k, float(Z.Y[0, 0] + W.Y[0, 0])
        )
        return KernelEstimate(val, H, nt, TailQuality.HEURISTIC, rel * scale)
    v, H, nt, rel, _ = _kernel_n2(Z.Z, W.Z, k, trunc)
    return KernelEstimate(v, H, nt, TailQuality.HEURISTIC, rel * abs(v))


def kernel_diag(Z: PointH, k: int, trunc: Truncation = DEFAULT_TRUNC) -> KernelEstimate:
    """det(Y)^k B_k(Z, Z), real and nonnegative."""
    est = kernel_offdiag(Z, Z, k, trunc)
    s = float(np.linalg.det(Z.Y)) ** k
    return KernelEstimate(float(est.value.real) * s, est.height_cutoff, est.n_terms, est.tail_quality, est.tail_estimate * s)


def kernel_diag_n1_batch(z: np.ndarray, k: int, trunc: Truncation = DEFAULT_TRUNC) -> np.ndarray:
    """Vectorized y^k B_k(z, z) over an array of points in the upper half plane."""
    _check_weight(1, k)
    z = np.asarray(z, dtype=complex).ravel()
    v, _, _, _ = _kernel_n1(z, z, k, trunc, outer=False)
    return v.real * z.imag ** k


def kernel_grid_n1(z: np.ndarray, w: np.ndarray, k: int, trunc: Truncation = DEFAULT_TRUNC) -> np.ndarray:
    """Matrix B_k(z_i, w_j)."""
    _check_weight(1, k)
    v, _, _, _ = _kernel_n1(z, w, k, trunc, outer=True)
    return v


def _check_weight(n: int, k: int):
    if k % 2:
        raise ValueError("only even weights are supported")
    if n == 1 and k < 12:
        raise ValueError("n = 1 needs k >= 12")
    if k <= n * (n + 1) / 2 + 1:
        raise ValueError("weight too small for absolute convergence")


def identity_term_diag(Z: PointH, k: int) -> float:
    """The identity-class, U = 1 contribution to kernel_diag (a positive lower bound)."""
    n = Z.n
    logp, phase = lipschitz_log_prefactor(n, k)
    Zp = Z.Z - np.conj(Z.Z)
    pref = math.exp(log_a_nk(n, k) + logp) * phase * (2j) ** (n * k)
    if n == 1:
        tmax = int(math.ceil(_t_cutoff(k, 1, 1e-16) / (2 * Z.Y[0, 0]))) + 1
        s = _tsum_n1(np.array([Zp[0, 0]]), k, tmax)[0]
    else:
        s = _tsum_n2(Zp[None], k, Z.Y, 1e-16)[0]
    return float((pref * s).real) * float(np.linalg.det(Z.Y)) ** k


# ---------------------------------------------------------------- scans and witnesses


@dataclass
class SupScanResult:
    argmax: PointH
    value: float
    table: list[dict] = field(default_factory=list)


def sup_grid_n1(k: int, resolution: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """x-nodes and y-nodes of the scan grid; doubling ``resolution`` refines it."""
    nx = 32 * resolution
    ny = 24 * resolution + 1
    xs = -0.5 + np.arange(nx) / nx
    ys = np.linspace(math.sqrt(3) / 2, 3 * k / (4 * math.pi), ny)
    ys = np.unique(np.append(ys, k / (4 * math.pi)))
    return xs, ys


def sup_scan(n: int, k: int, resolution: int = 1, trunc: Truncation = Truncation(tol=1e-12)) -> SupScanResult:
    """Maximum of kernel_diag over a grid of the truncated fundamental domain (n = 1)."""
    if n != 1:
        raise NotImplementedError("sup_scan is implemented for n = 1")
    xs, ys = sup_grid_n1(k, resolution)
    best_v, best_z = -1.0, None
    table = []
    for y in ys:
        zs = xs + 1j * y
        zs = zs[np.abs(zs) >= 1 - 1e-12]
        if zs.size == 0:
            continue
        vals = kernel_diag_n1_batch(zs, k, trunc)
        i = int(np.argmax(vals))
        table.append({"n": 1, "k": k, "y": float(y), "x_at_max": float(zs[i].real), "value": float(vals[i])})
        if vals[i] > best_v:
            best_v, best_z = float(vals[i]), zs[i]
    return SupScanResult(PointH.from_complex([[best_z]]), best_v, table)


def witness_norm(Z0: PointH, k: int, trunc: Truncation = DEFAULT_TRUNC) -> float:
    """sup-norm witness sqrt(B_k(Z0)) of the L2-normalized kernel row at Z0."""
    return math.sqrt(max(kernel_diag(Z0, k, trunc).value, 0.0))


def abs_h_sum(Z: PointH, k0: int, H: float) -> float:
    """sum |h_gamma(Z)|^{k0} over gamma = t_S g with |det(CZ+D)| <= H (n = 1, S summed to convergence)."""
    if Z.n != 1:
        raise NotImplementedError("implemented for n = 1")
    z = complex(Z.Z[0, 0])
    total = 0.0
    for pair in enumerate_coprime_pairs(1, Z, H):
        g = pair.completion()
        gz = complex(g.act(np.array([[np.conj(z)]]))[0, 0])
        c, d = pair.C[0][0], pair.D[0][0]
        jb = c * np.conj(z) + d
        # |h|^2 = (2y)^2 / |(z - g<z*> - s) j|^2 ; sum over integer shifts s
        base = abs(2 * z.imag / jb) ** k0
        shifts = np.arange(-4000, 4001)
        total += base * float(np.sum(np.abs(z - gz - shifts) ** (-float(k0))))
    return total
