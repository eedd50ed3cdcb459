"""Extended-precision scalar helpers.

Everything here is a pure function of its arguments.  High precision work goes
through mpmath; the working precision is taken from a ``PrecisionContext`` and
set locally with ``ctx.workprec()`` so callers never see a changed global state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np


class PrecisionBudgetError(ArithmeticError):
    """Raised when a series needs more mantissa bits than the context allows."""

    def __init__(self, message: str, needed_bits: int):
        super().__init__(message)
        self.needed_bits = needed_bits


@dataclass(frozen=True)
class PrecisionContext:
    mantissa_bits: int = 512
    series_tol: float = 1e-40
    max_terms: int = 20000

    def __post_init__(self):
        if self.mantissa_bits < 64:
            raise ValueError("mantissa_bits must be >= 64")
        if not 0 < self.series_tol < 1:
            raise ValueError("series_tol must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def workprec(self):
        return mpmath.workprec(self.mantissa_bits)

    def with_bits(self, bits: int) -> "PrecisionContext":
        return replace(self, mantissa_bits=int(bits))

    def doubled(self) -> "PrecisionContext":
        return replace(self, mantissa_bits=2 * self.mantissa_bits)


DEFAULT_CTX = PrecisionContext()


def e(x):
    """e(x) = exp(2 pi i x), for floats, complex numbers or numpy arrays."""
    if isinstance(x, np.ndarray):
        return np.exp(2j * np.pi * x)
    return complex(np.exp(2j * np.pi * x))


def log_gamma(x, ctx: PrecisionContext = DEFAULT_CTX):
    """ln Gamma(x) for real x > 0, returned as an mpf."""
    with ctx.workprec():
        xm = mpmath.mpmathify(x)
        if xm <= 0:
            raise ValueError(f"log_gamma needs x > 0, got {x}")
        return +mpmath.loggamma(xm)


def _as_half_integer(order) -> Fraction:
    nu = Fraction(order)
    if nu.denominator not in (1, 2) or nu < 0:
        raise ValueError(f"order must be a non-negative half-integer, got {order}")
    return nu


def _log2_peak_term(nu: float, x: float) -> float:
    # the largest term of the ascending series sits near j* = (sqrt(nu^2+x^2)-nu)/2
    if x == 0:
        return 0.0
    half = math.log(x / 2)
    jstar = max(0.0, (math.hypot(nu, x) - nu) / 2)
    best = -math.inf
    for j in {math.floor(jstar), math.ceil(jstar), 0}:
        val = (nu + 2 * j) * half - math.lgamma(j + 1) - math.lgamma(nu + j + 1)
        best = max(best, val)
    return best / math.log(2)


def bessel_bits_needed(order, x, ctx: PrecisionContext = DEFAULT_CTX) -> int:
    """Mantissa bits the ascending series needs at (order, x) to meet ctx.series_tol."""
    nu = float(_as_half_integer(order))
    peak = max(0.0, _log2_peak_term(nu, float(x)))
    return int(math.ceil(peak + math.log2(1 / ctx.series_tol) + 32))


def bessel_j(order, x, ctx: PrecisionContext = DEFAULT_CTX):
    """J_order(x) for half-integer order >= 0 and x >= 0 by the ascending series.

    The absolute error is below ``ctx.series_tol``.  Large x makes the series
    cancel badly; if the context does not carry enough bits for that, a
    ``PrecisionBudgetError`` is raised with the number of bits required.
    """
    nu = _as_half_integer(order)
    if x < 0:
        raise ValueError("bessel_j needs x >= 0")
    if x == 0:
        return mpmath.mpf(1) if nu == 0 else mpmath.mpf(0)
    needed = bessel_bits_needed(nu, x, ctx)
    if needed > ctx.mantissa_bits:
        raise PrecisionBudgetError(
            f"J_{nu}({float(x):.6g}) needs about {needed} mantissa bits, "
            f"context has {ctx.mantissa_bits}",
            needed,
        )
    with ctx.workprec():
        xm = mpmath.mpmathify(x)
        nu_m = mpmath.mpf(nu.numerator) / nu.denominator
        half = xm / 2
        q = -half * half
        term = mpmath.power(half, nu_m) / mpmath.gamma(nu_m + 1)
        total = term
        tol = mpmath.mpf(ctx.series_tol) / 4
        j = 0
        # terms grow until j ~ x/2, then shrink; stop once past the peak and tiny
        while j < ctx.max_terms:
            j += 1
            term = term * q / (j * (j + nu_m))
            total += term
            if 4 * j * (j + nu_m) > x * x and abs(term) < tol:
                break
        else:
            raise PrecisionBudgetError("bessel_j: max_terms reached", ctx.mantissa_bits)
        return +total


def _inverse_mod(d: int, c: int) -> int:
    return pow(d, -1, c)


def kloosterman_sum_complex(m: int, n: int, c: int, ctx: PrecisionContext = DEFAULT_CTX):
    """S(m,n;c) as an mpc, keeping the (vanishing) imaginary part."""
    if c < 1:
        raise ValueError("modulus c must be >= 1")
    if c == 1:
        return mpmath.mpc(1)
    with ctx.workprec():
        re = mpmath.mpf(0)
        im = mpmath.mpf(0)
        for d in range(1, c):
            if math.gcd(d, c) != 1:
                continue
            r = (m * d + n * _inverse_mod(d, c)) % c
            arg = mpmath.mpf(2 * r) / c
            re += mpmath.cospi(arg)
            im += mpmath.sinpi(arg)
        return mpmath.mpc(re, im)


def kloosterman_sum(m: int, n: int, c: int, ctx: PrecisionContext = DEFAULT_CTX):
    """Classical Kloosterman sum S(m,n;c), real valued."""
    return kloosterman_sum_complex(m, n, c, ctx).real


def torus_quadrature(
    f: Callable, points_per_dim: int, d: int = 1, vectorized: bool = False
) -> complex:
    """Equal-weight rule on the N^d grid {j/N} of [0,1)^d.

    With ``vectorized=True`` f receives d numpy arrays (one per coordinate,
    each of length N^d) and must return an array of values.
    """
    N = int(points_per_dim)
    if N < 2:
        raise ValueError("need at least 2 points per dimension")
    nodes = np.arange(N) / N
    if vectorized:
        grids = np.meshgrid(*([nodes] * d), indexing="ij")
        vals = np.asarray(f(*[g.ravel() for g in grids]))
        return complex(vals.sum() / N**d)
    total = 0j
    for pt in itertools.product(nodes, repeat=d):
        total += complex(f(*pt))
    return total / N**d


def fit_loglog_slope(samples: Iterable[Sequence[float]]) -> float:
    """Least-squares slope of ln v against ln k."""
    pts = [(float(k), float(v)) for k, v in samples]
    if len(pts) < 3:
        raise ValueError("need at least 3 samples")
    if any(k <= 0 or v <= 0 for k, v in pts):
        raise ValueError("samples must be positive")
    xs = [math.log(k) for k, _ in pts]
    ys = [math.log(v) for _, v in pts]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    if sxx <= 1e-300 or max(xs) == min(xs):
        raise ValueError("degenerate fit: all k are equal")
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    return sxy / sxx
