"""Acceptance checks, one function per criterion, shared by ``verify all`` and the test suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from . import bergman, fouriertail, heckeamp, latticecount, petersson, symspace
from .numerics import fit_loglog_slope

SWEEP_K = (12, 16, 20, 24, 28, 32, 36, 40)
AMP_PRIMES = (11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    table: list = field(default_factory=list)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  [{self.number:2d}] {self.name:<44s} {self.detail} ({self.seconds:.1f}s)"


def _timed(number: int, name: str):
    def deco(fn: Callable[[], tuple[bool, str] | tuple[bool, str, list]]):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            out = fn()
            passed, detail = out[0], out[1]
            table = out[2] if len(out) > 2 else []
            return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0, table)

        run.number = number
        run.criterion_name = name
        return run

    return deco


def _random_f1_point(rng, y_max: float = 2.5) -> complex:
    while True:
        x = rng.uniform(-0.5, 0.5)
        y = rng.uniform(math.sqrt(3) / 2, y_max)
        if x * x + y * y >= 1:
            return complex(x, y)


@_timed(1, "Lipschitz identity, n = 1, 2")
def c01_lipschitz():
    worst = 0.0
    t0 = time.perf_counter()
    for k in (12, 20):
        for z in (1j, 0.3 + 1.1j):
            Z = symspace.PointH.from_complex([[z]])
            a = bergman.lipschitz_series(Z, k, "direct")
            b = bergman.lipschitz_series(Z, k, "fourier")
            worst = max(worst, abs(a - b) / abs(b))
    X = np.full((2, 2), 0.2)
    Z = symspace.PointH(X, np.diag([1.1, 1.3]))
    for k in (10, 20):
        a = bergman.lipschitz_series(Z, k, "direct")
        b = bergman.lipschitz_series(Z, k, "fourier")
        worst = max(worst, abs(a - b) / abs(b))
    dt = time.perf_counter() - t0
    return worst <= 1e-8 and dt < 10, f"max residual {worst:.2e}"


@_timed(2, "rank-one kernel constancy, k = 12")
def c02_rank_one():
    rng = np.random.default_rng(2)
    zs = np.array([_random_f1_point(rng) for _ in range(10)])
    vals = bergman.kernel_diag_n1_batch(zs, 12)
    ref = zs.imag**12 * np.abs(petersson.delta_eval(zs, 50)) ** 2
    r = vals / ref
    spread = float(r.max() / r.min() - 1)
    return spread <= 1e-6, f"spread {spread:.2e}, 1/ratio {1 / r.mean():.10e}"


@_timed(3, "Petersson formula vs quadrature oracle")
def c03_oracle():
    worst = 0.0
    for k in (12, 16, 18):
        for t in (1, 2, 3, 4):
            ex = float(petersson.p_exact_deg1(t, k))
            orc = petersson.p_oracle(1, latticecount.HalfIntegralForm.from_entries(t), 0.5, k, N=64)
            worst = max(worst, abs(ex - orc) / abs(ex))
    r = float(petersson.p_exact_deg1(2, 12) / petersson.p_exact_deg1(1, 12))
    ok = worst <= 1e-5 and abs(r - 576) / 576 <= 1e-6
    return ok, f"max rel {worst:.2e}, p(2)/p(1) = {r:.9f}"


@_timed(4, "empty space k = 14")
def c04_empty():
    v = abs(float(petersson.p_exact_deg1(1, 14)))
    scale = float(petersson.p_exact_deg1(1, 12))
    return v <= 1e-10 * scale, f"|p(1)| at k=14 is {v:.2e} (k=12 scale {scale:.3e})"


@lru_cache(maxsize=1)
def _sweep():
    return [(k, bergman.sup_scan(1, k)) for k in SWEEP_K]


@_timed(5, "exponent fit n = 1")
def c05_fit():
    rows = _sweep()
    slope = fit_loglog_slope([(k, r.value) for k, r in rows])
    table = [{"k": k, "sup": r.value, "argmax": complex(r.argmax.Z[0, 0])} for k, r in rows]
    return 1.35 <= slope <= 1.65, f"slope {slope:.4f} (band [1.35, 1.65])", table


@_timed(6, "lower-bound chain n = 1")
def c06_lower():
    rows = _sweep()
    lows = [(k, float(petersson.lower_bound_value(1, k))) for k in SWEEP_K]
    below = all(lb <= r.value * (1 + 1e-3) for (k, lb), (_, r) in zip(lows, rows))
    slope = fit_loglog_slope(lows)
    return below and slope >= 1.4, f"below sup: {below}, slope {slope:.4f} (need >= 1.4)"


@_timed(7, "|h_gamma| <= 1, exact path")
def c07_h():
    rng = np.random.default_rng(7)
    bad = 0
    n_samples = 10_000
    for i in range(n_samples):
        n = 1 if i % 2 else 2
        g = symspace.random_word(n, int(rng.integers(0, 7)), rng)
        if n == 1:
            X = [[Fraction(int(rng.integers(-40, 41)), 20)]]
            Y = [[Fraction(int(rng.integers(1, 61)), 20)]]
        else:
            a, b, c = (int(v) for v in rng.integers(-30, 31, 3))
            X = [[Fraction(a, 20), Fraction(b, 20)], [Fraction(b, 20), Fraction(c, 20)]]
            l11, l22 = (Fraction(int(v), 10) for v in rng.integers(1, 21, 2))
            l21 = Fraction(int(rng.integers(-20, 21)), 10)
            Y = [[l11 * l11, l11 * l21], [l11 * l21, l21 * l21 + l22 * l22]]
        _, ok = bergman.h_factor_exact(g, X, Y)
        bad += not ok
    return bad == 0, f"{bad} violations in {n_samples} samples"


@_timed(8, "C_Y counting")
def c08_cy():
    # (a) two enumeration paths
    w40 = latticecount.WindowSpec(40)
    sizes = []
    ok_a = True
    for Y in (np.diag([2.0, 3.0]), np.array([[2.0, 0.5], [0.5, 3.0]])):
        a = sorted(latticecount.cy_set(Y, w40), key=lambda T: T.twice)
        b = sorted(latticecount.cy_set_direct(Y, w40), key=lambda T: T.twice)
        ok_a &= a == b
        sizes.append(len(a))
    # (b) emptiness beyond y_max > 2 k r_2 / 2 pi; window half-width below the centre
    k = 40
    wb = latticecount.WindowSpec(k, c_window=0.1)
    thr = 2 * k * fouriertail.SANDWICH_R[2] / (2 * math.pi)
    ok_b = True
    for i in range(20):
        y2 = thr * (1.01 + 0.2 * i)
        y1 = [0.9, 1.5, 3.0, 7.0][i % 4]
        y12 = 0.3 * y1 * ((i % 3) - 1)
        ok_b &= not latticecount.cy_set(np.array([[y1, y12], [y12, y2]]), wb)
    # (c) constant fitted at k = 40, checked at k = 80
    ratios = {}
    for kk in (40, 80):
        w = latticecount.WindowSpec(kk, eps=0.05)
        rs = []
        for j in range(9):
            eta = Fraction(j, 4)
            Y = kk ** (float(eta) / 2) * np.eye(2)
            cnt = len(latticecount.cy_set(Y, w))
            w1 = float(latticecount.piecewise_exponents(eta)[0])
            rs.append(cnt / kk ** (w1 + 0.05))
        ratios[kk] = rs
    C = max(ratios[40])
    ok_c = max(ratios[80]) <= C
    detail = f"(a) {ok_a} sizes {sizes}; (b) {ok_b}; (c) {ok_c}: C(40) = {C:.3f}, max ratio at 80 = {max(ratios[80]):.3f}"
    table = [{"k": kk, "eta": j / 4, "ratio": r} for kk in ratios for j, r in enumerate(ratios[kk])]
    return ok_a and ok_b and ok_c, detail, table


@_timed(9, "piecewise-exponent algebra")
def c09_exponents():
    defects = latticecount.continuity_defects()
    cont = all(d == 0 for ds in defects.values() for d in ds)
    val, args = latticecount.budget_maximum()
    ok = cont and val == Fraction(9, 2) and Fraction(2, 3) in args
    return ok, f"continuity {cont}; max {val} at {[str(a) for a in args]}"


@_timed(10, "Hecke coset counts")
def c10_hecke():
    ok_p = all(
        heckeamp.hecke_coset_count(p) == (p + 1) * (p * p + 1) == heckeamp.brute_force_coset_count(p) for p in (2, 3, 5, 7)
    )
    ok_bound = all(heckeamp.hecke_coset_count(m) <= heckeamp.coset_bound(m) for m in range(1, 51))
    ok_mult = all(
        heckeamp.hecke_coset_count(a * b) == heckeamp.hecke_coset_count(a) * heckeamp.hecke_coset_count(b)
        for a in range(1, 11)
        for b in range(a + 1, 11)
        if math.gcd(a, b) == 1
    )
    return ok_p and ok_bound and ok_mult, f"primes {ok_p}, bound {ok_bound}, multiplicative {ok_mult}"


@_timed(11, "amplifier gap")
def c11_amplifier():
    table = [heckeamp.amplifier_gap(p, 50) for p in AMP_PRIMES]
    lo = min(t.value for t in table)
    rows = [{"p": t.p, "gap": t.value, "x": t.argmin.x, "y": t.argmin.y, "z": t.argmin.z} for t in table]
    return lo >= 0.1, f"min over primes {lo:.4f}", rows


@_timed(12, "Fourier/Bergman consistency n = 1")
def c12_fourier():
    rng = np.random.default_rng(12)
    bad = 0
    worst = 0.0
    for i in range(20):
        k = (12, 20, 24, 28)[i % 4]
        z = _random_f1_point(rng, 3.0)
        sqrt_p = _exact_sqrt_p(k)
        env = petersson.trivial_envelope_deg1(k)
        rep = fouriertail.qk_eval(np.array([[z.imag]]), k, env, sqrt_p=lambda T: sqrt_p(T.twice[0] // 2))
        lhs = math.sqrt(max(bergman.kernel_diag(symspace.PointH.from_complex([[z]]), k).value, 0.0))
        bad += lhs > rep.total
        worst = max(worst, lhs / rep.total)
    return bad == 0, f"{bad} violations, max ratio {worst:.9f}"


@lru_cache(maxsize=None)
def _exact_sqrt_p(k: int):
    @lru_cache(maxsize=None)
    def f(t: int) -> float:
        return math.sqrt(max(float(petersson.p_exact_deg1(t, k)), 0.0))

    return f


@_timed(13, "rank-one cross test n = 2 (slow)")
def c13_cross():
    F = latticecount.HalfIntegralForm
    M = petersson.cross_oracle_deg2([F.identity(2), F.from_entries(1, 0, 2)], np.eye(2), 10, N=8)
    p1, p2 = M[0, 0].real, M[1, 1].real
    rel = abs(p1 * p2 - abs(M[0, 1]) ** 2) / (p1 * p2)
    return rel <= 0.05, f"relative defect {rel:.3f}"


CRITERIA = [
    c01_lipschitz,
    c02_rank_one,
    c03_oracle,
    c04_empty,
    c05_fit,
    c06_lower,
    c07_h,
    c08_cy,
    c09_exponents,
    c10_hecke,
    c11_amplifier,
    c12_fourier,
]
SLOW_CRITERIA = [c13_cross]


def run_all(include_slow: bool = False) -> list[CriterionResult]:
    todo = CRITERIA + (SLOW_CRITERIA if include_slow else [])
    return [c() for c in todo]
