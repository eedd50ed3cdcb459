"""Fourier-side majorants: the mass profile m(x), the (alpha, beta) envelopes
for p(T), the majorant q_k(Y) with its shell tail, and closed-form bounds.

Large quantities are handled as natural logarithms (floats) and only
exponentiated at the end through mpmath, so nothing overflows at k ~ 100.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath
import numpy as np

from .latticecount import HalfIntegralForm, WindowSpec, cy_set, enumerate_forms

DEFAULT_EPS_EXPONENT = 0.01
# empirical sandwich constants r_n for reduced matrices (r_1 is exact)
SANDWICH_R = {1: 1.0, 2: 2.0}


def log_mass(x: float, k: int) -> float:
    if x <= 0:
        return -math.inf
    return (k / 2) * math.log(4 * math.pi * x / k) + (k - 4 * math.pi * x) / 2


def mass(x: float, k: int) -> float:
    """m(x) = (4 pi x/k)^{k/2} exp((k - 4 pi x)/2); maximal (= 1) at x = k/4pi."""
    if k < 4:
        raise ValueError("k must be >= 4")
    if x <= 0:
        return 0.0
    return math.exp(log_mass(x, k))


@dataclass(frozen=True)
class AlphaBetaEnvelope:
    """sqrt p(T) <= e^{log_const} (4pi)^{nk/2} k^alpha det(T)^{k/2-beta} / Gamma(k)^{n/2}.

    ``two_term`` adds a second (alpha, beta) pair to the bracket.  With
    ``literal_n2`` the n = 2 two-term display is used verbatim, with prefactor
    (4pi)^k det(T)^{k/2} / sqrt(Gamma(k-2) Gamma(k-3/2)) and bracket
    det^{-3/4} + k^{-1/3} det^{-1/4+eps}.
    """

    alpha: float
    beta: float
    n: int
    two_term: Optional[tuple[float, float]] = None
    log_const: float = 0.0
    literal_n2: bool = False
    eps_exponent: float = DEFAULT_EPS_EXPONENT

    @classmethod
    def beta0_pair(cls, n: int) -> "AlphaBetaEnvelope":
        gamma_n = (n + 1) * (2 * n - 3) / 4
        return cls(alpha=(5 * n * n + 3 * n) / 8, beta=-gamma_n, n=n)

    @classmethod
    def degree2_two_term(cls, eps_exponent: float = DEFAULT_EPS_EXPONENT) -> "AlphaBetaEnvelope":
        return cls(alpha=7 / 4, beta=3 / 4, n=2, two_term=(17 / 12, 1 / 4 - eps_exponent), eps_exponent=eps_exponent)

    @classmethod
    def degree2_literal(cls, eps_exponent: float = DEFAULT_EPS_EXPONENT) -> "AlphaBetaEnvelope":
        return cls(alpha=7 / 4, beta=3 / 4, n=2, literal_n2=True, eps_exponent=eps_exponent)

    def pairs(self) -> list[tuple[float, float]]:
        out = [(self.alpha, self.beta)]
        if self.two_term is not None:
            out.append(self.two_term)
        return out

    def log_prefactor(self, k: int) -> float:
        """log of (4pi)^{nk/2} / Gamma(k)^{n/2} (or the literal n = 2 prefactor)."""
        if self.literal_n2:
            return k * math.log(4 * math.pi) - 0.5 * (math.lgamma(k - 2) + math.lgamma(k - 1.5))
        return self.n * k / 2 * math.log(4 * math.pi) - self.n / 2 * math.lgamma(k) + self.log_const

    def log_bracket(self, k: int, log_det: float) -> float:
        """log of sum_j k^alpha_j det^{-beta_j}."""
        if self.literal_n2:
            terms = [-0.75 * log_det, -math.log(k) / 3 + (-0.25 + self.eps_exponent) * log_det]
        else:
            terms = [a * math.log(k) - b * log_det for a, b in self.pairs()]
        top = max(terms)
        return top + math.log(sum(math.exp(t - top) for t in terms))

    def log_sqrt_p(self, T: HalfIntegralForm, k: int) -> float:
        if T.n != self.n:
            raise ValueError("envelope degree does not match T")
        if k <= self.n + 1:
            raise ValueError("need k > n + 1")
        ld = math.log(T.det())
        return self.log_prefactor(k) + k / 2 * ld + self.log_bracket(k, ld)


def p_envelope(T: HalfIntegralForm, k: int, env: AlphaBetaEnvelope) -> mpmath.mpf:
    """Envelope value for p(T)^{1/2}."""
    return mpmath.exp(env.log_sqrt_p(T, k))


class Region(enum.Enum):
    WINDOW = "window"
    SUBEXP_DECAY = "subexp_decay"
    EXP_CUTOFF = "exp_cutoff"


@dataclass(frozen=True)
class TailReport:
    main_value: float
    tail_bound: float
    region: Region
    n_main_terms: int = 0

    @property
    def total(self) -> float:
        return self.main_value + self.tail_bound


SqrtPProvider = Callable[[HalfIntegralForm], float]


def _eigs(T: HalfIntegralForm, Yf: np.ndarray) -> np.ndarray:
    R = np.linalg.cholesky(Yf)
    return np.linalg.eigvalsh(R.T @ T.matrix() @ R)


def classify_region(Y, k: int, w: WindowSpec) -> Region:
    Yf = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Yf.shape[0]
    if np.max(np.diag(Yf)) > n * k * SANDWICH_R[n] / (2 * math.pi):
        return Region.EXP_CUTOFF
    return Region.WINDOW if cy_set(Yf, w) else Region.SUBEXP_DECAY


def _shell_count_bound(Yf: np.ndarray, lam: float) -> float:
    """Number of T in Lambda_n with all TY-eigenvalues <= lam (box count)."""
    n = Yf.shape[0]
    Yi = np.linalg.inv(Yf)
    B = n * lam
    if n == 1:
        return math.floor(B * Yi[0, 0])
    N1 = math.floor(B * Yi[0, 0])
    N2 = math.floor(B * Yi[1, 1])
    return N1 * N2 * (4 * math.sqrt(N1 * N2) + 1)


def shell_tail(Y, k: int, env: AlphaBetaEnvelope, lam_start: float, max_shells: int = 200) -> float:
    """Bound on sum over T with lambda_max(TY) > lam_start of the q_k summand.

    Shells lam_start 2^t < lambda_max <= lam_start 2^{t+1}; in each the summand
    is at most the envelope value with m evaluated at the inner edge (m is
    decreasing beyond k/4pi) and the det(T) power at its worst shell value.
    """
    Yf = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Yf.shape[0]
    if lam_start < k / (4 * math.pi):
        raise ValueError("shells must start beyond the peak of m")
    log_detY = math.log(np.linalg.det(Yf))
    log_min_detT = math.log(1.0 if n == 1 else 0.75)
    total = 0.0
    for t in range(max_shells):
        lo = lam_start * 2**t
        hi = 2 * lo
        cnt = _shell_count_bound(Yf, hi)
        if cnt <= 0:
            continue
        # prod_j (4 pi lam_j)^{k/2} e^{-2 pi lam_j} <= (k/e)^{nk/2} m(lo)
        log_main = env.log_prefactor(k) + n * k / 2 * math.log(k / (4 * math.pi * math.e)) + log_mass(lo, k)
        log_det_hi = n * math.log(hi) - log_detY
        brk = max(env.log_bracket(k, log_min_detT), env.log_bracket(k, max(log_det_hi, log_min_detT)))
        term = math.log(cnt) + log_main + brk
        if np.isfinite(term):
            total += math.exp(term) if term < 700 else math.inf
        if t > 2 and term < math.log(max(total, 1e-300)) - 60:
            break
    return total


def envelope_provider(env: AlphaBetaEnvelope, k: int) -> SqrtPProvider:
    return lambda T: math.exp(env.log_sqrt_p(T, k))


def qk_eval(
    Y,
    k: int,
    env: AlphaBetaEnvelope,
    w: WindowSpec | None = None,
    sqrt_p: SqrtPProvider | None = None,
) -> TailReport:
    """q_k(Y) = sum_T sqrt p(T) det(Y)^{k/2} exp(-2 pi tr TY), split into main + tail.

    The main part sums every T with lambda_max(TY) <= max(2k, k + 4 pi kappa)/(4 pi)
    using ``sqrt_p`` (defaults to the envelope itself); the remainder is bounded
    by the geometric shell estimate using ``env`` as an upper envelope.
    """
    Yf = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Yf.shape[0]
    w = w or WindowSpec(k)
    sqrt_p = sqrt_p or envelope_provider(env, k)
    region = classify_region(Yf, k, w)
    lam_main = max(2 * k, k + 4 * math.pi * w.kappa) / (4 * math.pi)
    forms = enumerate_forms(n, Yf, n * lam_main)
    half_log_det = k / 2 * math.log(np.linalg.det(Yf))
    main = 0.0
    used = 0
    for T in forms:
        ev = _eigs(T, Yf)
        if ev[-1] > lam_main:
            continue
        used += 1
        sp = sqrt_p(T)
        if sp == 0:
            continue
        main += math.exp(math.log(sp) + half_log_det - 2 * math.pi * T.trace_with(Yf))
    tail = shell_tail(Yf, k, env, lam_main)
    return TailReport(main_value=main, tail_bound=tail, region=region, n_main_terms=used)


def fourier_sup_bound(
    Y, k: int, n: int, env: AlphaBetaEnvelope, variant: str = "n/4", eps_exponent: float | None = None
) -> float:
    """Closed-form majorant of sqrt(B_k): (k^n/det Y)^{e1 - beta} k^{n/4 + alpha (+ eps)}.

    ``variant`` "n/4" uses e1 = (n+1)/4 and needs Y >> 1; "n/2" uses e1 = (n+1)/2.
    Two-term envelopes add the contributions of both pairs.
    """
    eps = env.eps_exponent if eps_exponent is None else eps_exponent
    Yf = np.atleast_2d(np.asarray(Y, dtype=float))
    log_ratio = n * math.log(k) - math.log(np.linalg.det(Yf))
    if variant == "n/4":
        e1, extra = (n + 1) / 4, eps
    elif variant == "n/2":
        e1, extra = (n + 1) / 2, 0.0
    else:
        raise ValueError("variant must be 'n/4' or 'n/2'")
    total = 0.0
    for a, b in env.pairs():
        total += math.exp((e1 - b) * log_ratio + (n / 4 + a + extra) * math.log(k))
    return total


def fourier_sup_exponent(n: int, env: AlphaBetaEnvelope, eta: float, variant: str = "n/4") -> float:
    """Exponent of k in fourier_sup_bound when det Y = k^eta (worst pair)."""
    e1 = (n + 1) / 4 if variant == "n/4" else (n + 1) / 2
    extra = env.eps_exponent if variant == "n/4" else 0.0
    return max((e1 - b) * (n - eta) + n / 4 + a + extra for a, b in env.pairs())
