"""Spectral side: the Petersson constants, degree-one Poincare coefficients,
p(T) exactly (n = 1) and by kernel quadrature, the degree-two envelope and
the lower-bound chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .bergman import (
    Truncation,
    _kernel_n2_coefficients,
    kernel_grid_n1,
)
from .fouriertail import DEFAULT_EPS_EXPONENT, AlphaBetaEnvelope
from .latticecount import HalfIntegralForm, automorph_count
from .numerics import DEFAULT_CTX, PrecisionContext, bessel_j, kloosterman_sum, log_gamma
from .symspace import PointH


class OracleBudgetError(RuntimeError):
    pass


# p(t) = c_{1,k}^{-1} t^{k-1} a_{P_t}(t) overshoots the orthonormal-basis sum by
# (4 pi)^{1/2}; the kernel quadrature oracle fixes this factor (see the audit test)
DEG1_NORMALIZATION = 1 / math.sqrt(4 * math.pi)


@dataclass(frozen=True)
class PeterssonConstant:
    n: int
    k: int
    log_value: float

    @property
    def value(self) -> mpmath.mpf:
        return mpmath.exp(self.log_value)


def c_nk(n: int, k: int) -> PeterssonConstant:
    """pi^{n(n-1)/2} (4pi)^{n(n+1)/4 - nk} prod_{j=1}^n Gamma(k - (n+j)/2)."""
    args = [k - (n + j) / 2 for j in range(1, n + 1)]
    if min(args) <= 0:
        raise ValueError(f"c_nk has a pole: Gamma argument {min(args)} <= 0")
    val = n * (n - 1) / 2 * math.log(math.pi) + (n * (n + 1) / 4 - n * k) * math.log(4 * math.pi)
    val += sum(float(log_gamma(a)) for a in args)
    return PeterssonConstant(n, k, val)


# ---------------------------------------------------------------- degree one


def poincare_coeff_deg1(
    m: int, t: int, k: int, c_max: int = 60, ctx: PrecisionContext = DEFAULT_CTX, tail_mode: str = "classical"
) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(a_{P_m}(t) summed to c_max, bound on the omitted c > c_max).

    a_{P_m}(t) = delta_{mt} + 2 pi i^{-k} sum_c S(m,t;c)/c J_{k-1}(4 pi sqrt(mt)/c).
    The tail uses |S| <= c and |J_{k-1}(x)| <= (x/2)^{k-1}/Gamma(k)
    (``tail_mode="loose"`` drops the 1/Gamma(k), which is weaker but also valid).
    """
    if m < 1 or t < 1:
        raise ValueError("m and t must be positive")
    if k % 2 or k < 4:
        raise ValueError("k must be even and >= 4")
    if c_max < 1:
        raise ValueError("c_max must be >= 1")
    with ctx.workprec():
        sign = -1 if (k // 2) % 2 else 1  # i^{-k}
        x0 = 4 * mpmath.pi * mpmath.sqrt(m * t)
        s = mpmath.mpf(0)
        for c in range(1, c_max + 1):
            x = x0 / c
            bctx = ctx
            need = _bits_for(k - 1, x, ctx)
            if need > ctx.mantissa_bits:
                bctx = ctx.with_bits(need)
            s += kloosterman_sum(m, t, c, bctx) / c * bessel_j(k - 1, x, bctx)
        value = (1 if m == t else 0) + 2 * mpmath.pi * sign * s
        half = x0 / 2
        tail = 2 * mpmath.pi * half ** (k - 1) * mpmath.mpf(c_max) ** (-(k - 2)) / (k - 2)
        if tail_mode == "classical":
            tail /= mpmath.gamma(k)
        elif tail_mode != "loose":
            raise ValueError("tail_mode must be 'classical' or 'loose'")
        return +value, +tail


def _bits_for(order, x, ctx):
    from .numerics import bessel_bits_needed

    return bessel_bits_needed(order, float(x), ctx)


def p_exact_deg1(t: int, k: int, c_max: int = 60, audited: bool = True, ctx: PrecisionContext = DEFAULT_CTX):
    """sum over an orthonormal basis of S_k(SL_2(Z)) of |a_f(t)|^2."""
    a, _ = poincare_coeff_deg1(t, t, k, c_max, ctx)
    with ctx.workprec():
        val = mpmath.exp(-c_nk(1, k).log_value) * mpmath.mpf(t) ** (k - 1) * a
        if audited:
            val *= DEG1_NORMALIZATION
        return +val


def p_trivial_upper_deg1(t: int, k: int) -> float:
    """Upper bound (4 pi t)^{k-1}/Gamma(k-1) (1 + 2 pi (2 pi t + 1 + 2 pi t/(k-2))) for p(t)."""
    return math.exp((k - 1) * math.log(4 * math.pi * t) - math.lgamma(k - 1)) * (
        1 + 2 * math.pi * (2 * math.pi * t + 1 + 2 * math.pi * t / (k - 2))
    )


def trivial_envelope_deg1(k: int) -> AlphaBetaEnvelope:
    """(alpha, beta) = (0, 0) envelope with explicit constant dominating sqrt p(t) for all t >= 1."""
    const = (k - 1) / (4 * math.pi) * (1 + 2 * math.pi + 4 * math.pi**2 * (1 + 1 / (k - 2)))
    return AlphaBetaEnvelope(alpha=0.0, beta=0.0, n=1, log_const=0.5 * math.log(const))


# ---------------------------------------------------------------- the quadrature oracle


@lru_cache(maxsize=8)
def _grid_n1(k: int, y: float, N: int, tol: float) -> np.ndarray:
    x = np.arange(N) / N
    z = x + 1j * y
    return kernel_grid_n1(z, z, k, Truncation(tol=tol))


def p_oracle(
    n: int,
    T: HalfIntegralForm,
    Y_aux,
    k: int,
    N: int = 64,
    tol: float = 1e-15,
    return_complex: bool = False,
):
    """e^{4 pi tr(T Y)} times the double torus average of B_k(X+iY, X'+iY) e(-tr TX + tr TX')."""
    if N < 2 or N & (N - 1):
        raise ValueError("N must be a power of two")
    if T.n != n:
        raise ValueError("T has the wrong degree")
    if n == 1:
        y = float(np.atleast_2d(Y_aux)[0, 0])
        t = T.twice[0] // 2
        K = _grid_n1(k, y, N, tol)
        ph = np.exp(-2j * np.pi * t * np.arange(N) / N)
        avg = (ph @ K @ np.conj(ph)) / N**2
        val = avg * math.exp(4 * math.pi * t * y)
        return complex(val) if return_complex else float(val.real)
    if n == 2:
        val = cross_oracle_deg2([T], Y_aux, k, N)[0, 0]
        return complex(val) if return_complex else float(val.real)
    raise ValueError("n must be 1 or 2")


def cross_oracle_deg2(
    Ts: list[HalfIntegralForm], Y_aux, k: int, N: int = 8, trunc: Truncation = Truncation(tol=1e-8, H=2.0)
) -> np.ndarray:
    """Matrix cross(T, T') = sum_F a_F(T) conj a_F(T') by six-dimensional torus quadrature.

    The kernel on the N^3 x N^3 grid of (X, X') is evaluated through its Fourier
    expansion in Z (the coefficients depend on W); both X-averages are grid sums.
    """
    if N > 8:
        raise OracleBudgetError("the degree-two oracle is limited to N <= 8")
    if N < 2 or N & (N - 1):
        raise ValueError("N must be a power of two")
    Y = np.atleast_2d(np.asarray(Y_aux, dtype=float))
    nodes = np.arange(N) / N
    grid = np.array(np.meshgrid(nodes, nodes, nodes, indexing="ij")).reshape(3, -1).T  # x11, x12, x22
    mats = [T.matrix() for T in Ts]

    def tr_TX(Tm):
        return Tm[0, 0] * grid[:, 0] + 2 * Tm[0, 1] * grid[:, 1] + Tm[1, 1] * grid[:, 2]

    ph = np.array([np.exp(-2j * np.pi * tr_TX(Tm)) for Tm in mats])  # (nT, G)
    acc = np.zeros((len(Ts), len(Ts)), dtype=complex)
    for g, php in zip(grid, ph.T):
        X = np.array([[g[0], g[1]], [g[1], g[2]]])
        forms, beta = _kernel_n2_coefficients(X + 1j * Y, k, Y, trunc)
        trZ = (
            np.outer(grid[:, 0] + 1j * Y[0, 0], forms[:, 0] / 2)
            + np.outer(grid[:, 1] + 1j * Y[0, 1], forms[:, 1])
            + np.outer(grid[:, 2] + 1j * Y[1, 1], forms[:, 2] / 2)
        )
        Bz = np.exp(2j * np.pi * trZ) @ beta  # B(Z, W) over the Z-grid
        acc += np.outer(ph @ Bz, np.conj(php))
    acc /= grid.shape[0] ** 2
    scale = np.array([math.exp(2 * math.pi * float(np.trace(Tm @ Y))) for Tm in mats])
    return acc * np.outer(scale, scale)


# ---------------------------------------------------------------- degree two envelope and lower bounds


def poincare_bound_deg2(
    T: HalfIntegralForm, k: int, C_policy: float = 10.0, eps_exponent: float = DEFAULT_EPS_EXPONENT
) -> float:
    """delta(T,T) + C k^{-2/3} det(T)^{1+eps}."""
    if T.n != 2:
        raise ValueError("degree-two envelope needs n = 2")
    return automorph_count(T) + C_policy * k ** (-2 / 3) * float(T.det()) ** (1 + eps_exponent)


@dataclass(frozen=True)
class UnitMass:
    lower: mpmath.mpf
    upper: mpmath.mpf | None
    exact: bool


def unit_coeff_mass(n: int, k: int, c_max: int = 60) -> UnitMass:
    """sum_F |a_F(1_n)|^2: exact for n = 1, certified lower bound (and envelope) for n = 2."""
    if n == 1:
        v = p_exact_deg1(1, k, c_max)
        return UnitMass(v, v, True)
    if n == 2:
        if k < 10:
            raise ValueError("the degree-two lower bound is asserted only for k >= 10")
        inv_c = mpmath.exp(-c_nk(2, k).log_value)
        aut = automorph_count(HalfIntegralForm.identity(2))
        lower = inv_c * mpmath.mpf(aut) / 4
        upper = inv_c * poincare_bound_deg2(HalfIntegralForm.identity(2), k)
        return UnitMass(lower, upper, False)
    raise ValueError("n must be 1 or 2")


def lower_bound_value(n: int, k: int, c_max: int = 60) -> mpmath.mpf:
    """(k/4 pi e)^{nk} times the unit coefficient mass: a lower bound for sup B_k."""
    um = unit_coeff_mass(n, k, c_max)
    return mpmath.power(mpmath.mpf(k) / (4 * mpmath.pi * mpmath.e), n * k) * um.lower


# ---------------------------------------------------------------- the discriminant function


@lru_cache(maxsize=8)
def delta_coefficients(N: int = 50) -> tuple[int, ...]:
    """tau(1..N) from q prod (1 - q^n)^24 by exact integer convolution."""
    c = [0] * N
    c[0] = 1  # coefficients of prod (1-q^n)^24 up to q^{N-1}
    for n in range(1, N):
        for _ in range(24):
            for m in range(N - 1, n - 1, -1):
                c[m] -= c[m - n]
    return tuple(c)


def delta_eval(z, N: int = 50) -> np.ndarray:
    tau = np.array(delta_coefficients(N), dtype=float)
    z = np.asarray(z, dtype=complex)
    q = np.exp(2j * np.pi * z)
    out = np.zeros_like(q)
    for n in range(N, 0, -1):
        out = (out + tau[n - 1]) * q
    return out


def petersson_norm_delta(nx: int = 48, ny: int = 64, N: int = 50) -> float:
    """<Delta, Delta> = int_F y^12 |Delta|^2 dx dy / y^2 by Gauss rules."""
    xg, xw = np.polynomial.legendre.leggauss(nx)
    xg, xw = xg / 2, xw / 2
    yg, yw = np.polynomial.legendre.leggauss(ny)
    lg, lw = np.polynomial.laguerre.laggauss(ny)
    top = 2.0
    total = 0.0
    for x, wx in zip(xg, xw):
        y0 = math.sqrt(1 - x * x)
        ys = y0 + (top - y0) * (yg + 1) / 2
        f = ys**10 * np.abs(delta_eval(x + 1j * ys, N)) ** 2
        total += wx * (top - y0) / 2 * float(np.dot(yw, f))
        # [top, oo): substitute y = top + u/(4 pi), integrand carries e^{-4 pi y}
        yl = top + lg / (4 * math.pi)
        fl = yl**10 * np.abs(delta_eval(x + 1j * yl, N)) ** 2 * np.exp(lg) / (4 * math.pi)
        total += wx * float(np.dot(lw, fl))
    return total
