"""Command line entry point (``siegelbk``)."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import click
import numpy as np

from . import acceptance, bergman, fouriertail, heckeamp, latticecount, petersson, symspace
from .numerics import fit_loglog_slope


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = 512
    eps_exponent: float = fouriertail.DEFAULT_EPS_EXPONENT
    tol: float = 1e-12
    H: float = 0.0  # 0 means automatic
    U_bound: int = 0  # 0 means automatic
    c_max: int = 60
    N_quad: int = 64
    format: str = "json"
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("H", "U_bound", "seed"):
                if v < 0:
                    raise ValueError(f"{f.name} must be nonnegative")
            elif f.name != "format" and not v > 0:
                raise ValueError(f"{f.name} must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")

    def hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def truncation(self) -> bergman.Truncation:
        return bergman.Truncation(tol=self.tol, H=self.H or None, U_norm_bound=self.U_bound or None)


def read_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"bad config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    merged = {}
    for src in (file_values, {k: v for k, v in overrides.items() if v is not None}):
        for key, val in src.items():
            if key not in types:
                raise click.UsageError(f"unknown config key {key!r}")
            conv = {"int": int, "float": float, "str": str}[types[key] if isinstance(types[key], str) else types[key].__name__]
            merged[key] = conv(val)
    try:
        return RunConfig(**merged)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag] if x.imag else x.real
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if hasattr(x, "__float__") and not isinstance(x, (int, float)):
        return float(x)
    return x


class Emitter:
    def __init__(self, cfg: RunConfig, stream=None):
        self.cfg = cfg
        self.stream = stream or sys.stdout

    def record(self, command: str, result, tail=None, quality=None):
        if self.cfg.format == "json":
            obj = {"command": command, "config_hash": self.cfg.hash(), "result": _jsonable(result), "tail": _jsonable(tail), "quality": quality}
            self.stream.write(json.dumps(obj, sort_keys=False) + "\n")
        else:
            rows = result if isinstance(result, list) and result and isinstance(result[0], dict) else [{"result": result}]
            self.rows(command, rows, tail, quality)

    def rows(self, command: str, rows: list[dict], tail=None, quality=None):
        if self.cfg.format == "json":
            self.record(command, rows, tail, quality)
            return
        buf = io.StringIO()
        keys = list(rows[0].keys()) if rows else []
        extra = [] if tail is None else ["tail"]
        if quality is not None:
            extra.append("quality")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys + extra + ["config_hash"])
        for r in rows:
            vals = [_fmt(_jsonable(r[k])) for k in keys]
            if tail is not None:
                vals.append(_fmt(_jsonable(tail)))
            if quality is not None:
                vals.append(quality)
            w.writerow(vals + [self.cfg.hash()])
        self.stream.write(buf.getvalue())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(_fmt(x) for x in v)
    return v


def parse_point(spec: str) -> symspace.PointH:
    """A point of H_n from a file or inline text: two matrix lines (X, then Y), or 'X;Y'."""
    p = Path(spec)
    text = p.read_text() if p.exists() else spec
    parts = [s.strip() for s in text.replace(";", "\n").splitlines() if s.strip() and not s.strip().startswith("#")]
    if len(parts) != 2:
        raise click.UsageError("a point needs two matrix lines: X then Y")
    try:
        X = symspace.parse_matrix(parts[0]).to_numpy()
        Y = symspace.parse_matrix(parts[1]).to_numpy()
        return symspace.PointH(X, Y)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def parse_sym(spec: str) -> np.ndarray:
    p = Path(spec)
    text = p.read_text().strip() if p.exists() else spec
    try:
        return symspace.parse_matrix(text).to_numpy()
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def parse_form(spec: str, n: int) -> latticecount.HalfIntegralForm:
    vals = spec.replace(",", " ").split()
    if n == 1 and len(vals) == 1:
        return latticecount.HalfIntegralForm.from_entries(vals[0])
    if n == 2 and len(vals) == 3:
        return latticecount.HalfIntegralForm.from_entries(*vals)
    raise click.UsageError("T is 't' for n = 1 or 't11 t12 t22' for n = 2")


pass_cfg = click.make_pass_decorator(RunConfig)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key=value config file")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--precision-bits", type=int, default=None)
@click.option("--eps-exponent", type=float, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--H", "H", type=float, default=None, help="coset height cutoff (0 = automatic)")
@click.option("--U-bound", "U_bound", type=int, default=None)
@click.option("--cmax", "c_max", type=int, default=None)
@click.option("--N-quad", "N_quad", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def cli(ctx, config_path, fmt, **overrides):
    """Bergman kernels of Siegel cusp forms: evaluation and verification."""
    overrides["format"] = fmt
    ctx.obj = build_config(read_config(config_path), overrides)


@cli.group()
def bk():
    """Bergman kernel evaluation."""


@bk.command("eval")
@click.option("--n", type=click.IntRange(1, 2), required=True)
@click.option("--k", type=int, required=True)
@click.option("--Z", "z_spec", required=True, help="file or inline 'X;Y' in matrix text format")
@pass_cfg
def bk_eval(cfg, n, k, z_spec):
    Z = parse_point(z_spec)
    if Z.n != n:
        raise click.UsageError("Z has the wrong size")
    try:
        est = bergman.kernel_diag(Z, k, cfg.truncation())
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("bk eval", {"value": est.value, "H": est.height_cutoff, "terms": est.n_terms}, est.tail_estimate, est.tail_quality.value)


@bk.command("sup-scan")
@click.option("--n", type=click.IntRange(1, 1), default=1)
@click.option("--k-list", required=True, help="comma separated weights")
@click.option("--grid", type=int, default=1, help="grid resolution multiplier")
@pass_cfg
def bk_sup_scan(cfg, n, k_list, grid):
    ks = [int(s) for s in k_list.split(",") if s.strip()]
    rows = []
    for k in ks:
        res = bergman.sup_scan(n, k, grid, bergman.Truncation(tol=cfg.tol))
        z = complex(res.argmax.Z[0, 0])
        rows.append({"n": n, "k": k, "x": z.real, "y": z.imag, "value": res.value})
    Emitter(cfg).rows("bk sup-scan", rows, tail=0.0, quality="heuristic")


@bk.command("fit")
@click.option("--csv", "csv_path", type=click.Path(exists=True, dir_okay=False), required=True)
@pass_cfg
def bk_fit(cfg, csv_path):
    samples = _read_fit_csv(csv_path)
    Emitter(cfg).record("bk fit", {"slope": fit_loglog_slope(samples), "points": len(samples)})


def _read_fit_csv(path: str) -> list[tuple[float, float]]:
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    rows = [r for r in rows if r]
    if not rows:
        raise click.UsageError("empty CSV")
    try:
        float(rows[0][0])
        return [(float(r[0]), float(r[1])) for r in rows]
    except ValueError:
        head = [h.strip() for h in rows[0]]
        ik = head.index("k") if "k" in head else 0
        iv = head.index("value") if "value" in head else 1
        return [(float(r[ik]), float(r[iv])) for r in rows[1:]]


@cli.group()
def lipschitz():
    """Lipschitz summation identity."""


@lipschitz.command("check")
@click.option("--n", type=click.IntRange(1, 2), required=True)
@click.option("--k", type=int, required=True)
@click.option("--Z", "z_spec", required=True)
@pass_cfg
def lipschitz_check(cfg, n, k, z_spec):
    Z = parse_point(z_spec)
    if Z.n != n:
        raise click.UsageError("Z has the wrong size")
    try:
        a = bergman.lipschitz_series(Z, k, "direct")
        b = bergman.lipschitz_series(Z, k, "fourier")
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("lipschitz check", {"direct": a, "fourier": b, "residual": abs(a - b) / abs(b)})


@cli.group("petersson")
def petersson_grp():
    """Spectral side."""


@petersson_grp.command("p1")
@click.option("--k", type=int, required=True)
@click.option("--t", type=click.IntRange(min=1), required=True)
@pass_cfg
def petersson_p1(cfg, k, t):
    from .numerics import PrecisionContext

    ctx = PrecisionContext(mantissa_bits=cfg.precision_bits)
    try:
        a, tail = petersson.poincare_coeff_deg1(t, t, k, cfg.c_max, ctx)
        p = petersson.p_exact_deg1(t, k, cfg.c_max, ctx=ctx)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("petersson p1", {"p": p, "a_P": a}, tail, "rigorous")


@cli.group()
def oracle():
    """Quadrature oracle."""


@oracle.command("p")
@click.option("--n", type=click.IntRange(1, 2), required=True)
@click.option("--k", type=int, required=True)
@click.option("--T", "t_spec", required=True)
@click.option("--N", "N", type=int, default=None)
@click.option("--y", "y_aux", type=float, default=None, help="scalar Im part Y_aux = y 1_n")
@pass_cfg
def oracle_p(cfg, n, k, t_spec, N, y_aux):
    T = parse_form(t_spec, n)
    N = N or (cfg.N_quad if n == 1 else 8)
    y = y_aux or (0.5 if n == 1 else 1.0)
    try:
        v = petersson.p_oracle(n, T, y * np.eye(n), k, N)
    except (ValueError, petersson.OracleBudgetError) as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("oracle p", {"p": v}, None, "quadrature")


@cli.group()
def cy():
    """Window sets C_Y."""


@cy.command("count")
@click.option("--n", type=click.IntRange(1, 2), required=True)
@click.option("--k", type=int, required=True)
@click.option("--Y", "y_spec", required=True)
@click.option("--eps", type=float, default=0.25)
@click.option("--c-window", type=float, default=1.0)
@pass_cfg
def cy_count(cfg, n, k, y_spec, eps, c_window):
    Y = parse_sym(y_spec)
    if Y.shape[0] != n:
        raise click.UsageError("Y has the wrong size")
    try:
        w = latticecount.WindowSpec(k, eps, c_window)
        forms, border = latticecount.cy_set(Y, w, return_borderline=True)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("cy count", {"count": len(forms), "borderline": border})


@cli.group()
def qk():
    """Fourier majorant q_k."""


@qk.command("eval")
@click.option("--n", type=click.IntRange(1, 2), required=True)
@click.option("--k", type=int, required=True)
@click.option("--Y", "y_spec", required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@pass_cfg
def qk_eval(cfg, n, k, y_spec, alpha, beta):
    Y = parse_sym(y_spec)
    if Y.shape[0] != n:
        raise click.UsageError("Y has the wrong size")
    if alpha is None or beta is None:
        env = fouriertail.AlphaBetaEnvelope.beta0_pair(n)
    else:
        env = fouriertail.AlphaBetaEnvelope(alpha, beta, n, eps_exponent=cfg.eps_exponent)
    try:
        rep = fouriertail.qk_eval(Y, k, env)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    Emitter(cfg).record("qk eval", {"main": rep.main_value, "region": rep.region.value, "terms": rep.n_main_terms}, rep.tail_bound, "rigorous")


@cli.group()
def hecke():
    """Hecke coset enumeration."""


@hecke.command("cosets")
@click.option("--m", type=click.IntRange(min=1), required=True)
@click.option("--list", "show", is_flag=True, help="print the representatives")
@pass_cfg
def hecke_cosets(cfg, m, show):
    try:
        count = heckeamp.hecke_coset_count(m)
    except heckeamp.CosetCapError as exc:
        raise click.UsageError(str(exc)) from exc
    if show:
        reps = heckeamp.enumerate_hecke_cosets(m)
        Emitter(cfg).rows("hecke cosets", [{"A": r.A, "B": r.B, "C": r.C_blk} for r in reps])
    elif cfg.format == "json":
        Emitter(cfg).record("hecke cosets", count)
    else:
        click.echo(count)


@cli.group()
def amp():
    """Amplifier inequality."""


@amp.command("gap")
@click.option("--p", type=int, required=True)
@click.option("--grid", type=click.IntRange(min=2), default=50)
@pass_cfg
def amp_gap(cfg, p, grid):
    if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
        raise click.UsageError("p must be prime")
    g = heckeamp.amplifier_gap(p, grid)
    Emitter(cfg).record("amp gap", {"p": p, "gap": g.value, "argmin": [g.argmin.x, g.argmin.y, g.argmin.z]})


@cli.group()
def verify():
    """Acceptance suite."""


@verify.command("all")
@click.option("--slow", is_flag=True, help="include the optional slow criterion")
def verify_all(slow):
    failed = 0
    for crit in acceptance.CRITERIA + (acceptance.SLOW_CRITERIA if slow else []):
        res = crit()
        click.echo(res.line())
        failed += not res.passed
    click.echo(f"{failed} failing criteria")
    sys.exit(1 if failed else 0)


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="siegelbk", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 2
    return rv or 0


if __name__ == "__main__":
    sys.exit(main())
