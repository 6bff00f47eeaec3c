"""Command-line front end: verification campaigns that write CSV error tables.

Every subcommand reads a flat ``key=value`` config (``--config``) whose values
are overridden by command-line flags, processes its point list (optionally in
parallel) and writes one row per point in config order. The exit status is 0
iff every row passes.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .algebra import Element, ElementParseError, decompose, format_element, get_algebra
from .geometry import (
    Gis,
    jacobian_In,
    jacobian_In_det,
    jacobian_In_gram,
    parameter_box,
    parse_domain,
    parse_gis,
    sphere_volume,
    theta_grid,
)
from .jump import extension_test, jump_check
from .quadrature import QuadratureGrid, cauchy_reconstruct, kernel_CS
from .slice import (
    CoordinateDatum,
    SliceRegularPolynomial,
    conj_stem,
    evaluate_function,
    identity_stem,
    normsq_stem,
)

COMMANDS = ("verify-cauchy", "verify-jump", "extension-test", "lemma-suite", "kernel-eval")
STEMS = {"identity": identity_stem, "conj": conj_stem, "normsq": normsq_stem}
THREADS_ENV = "SLICE_CAUCHY_THREADS"

CONFIG_KEYS = {
    "command", "algebra", "gis", "domain", "function", "points", "grid", "out", "tol",
    "offsets", "expect", "w", "n_max", "samples", "seed", "timing",
}


class ConfigError(ValueError):
    """Bad config value, located by line and column when it came from a file."""

    def __init__(self, message, line=None, column=None, source="<config>"):
        self.line, self.column = line, column
        if line is not None:
            where = f"{source}:{line}" + (f":{column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


@dataclass
class ConfigValue:
    text: str
    line: int | None = None
    column: int | None = None


@dataclass
class RunConfig:
    command: str
    values: dict[str, ConfigValue] = field(default_factory=dict)
    source: str = "<config>"

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v.text

    def error(self, key, message, offset: int = 0):
        v = self.values.get(key)
        if v is None or v.line is None:
            return ConfigError(f"{key}: {message}")
        return ConfigError(f"{key}: {message}", v.line, v.column + offset, self.source)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, ConfigValue]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in raw:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigError("expected key=value", lineno, col, source)
        key_raw, _, value_raw = raw.partition("=")
        key = key_raw.strip()
        if key not in CONFIG_KEYS:
            col = len(key_raw) - len(key_raw.lstrip()) + 1
            raise ConfigError(f"unknown key {key!r}", lineno, col, source)
        lead = len(value_raw) - len(value_raw.lstrip())
        out[key] = ConfigValue(value_raw.strip(), lineno, len(key_raw) + 2 + lead)
    return out


# -- spec parsing ------------------------------------------------------------------

def split_top_level(text: str, sep: str) -> list[tuple[str, int]]:
    """Split on ``sep`` outside brackets; returns ``(piece, start offset)`` pairs."""
    pieces, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == sep and depth == 0:
            pieces.append((text[start:k], start))
            start = k + 1
    pieces.append((text[start:], start))
    return pieces


def _parse_elements(cfg: RunConfig, key: str, algebra, sep: str = ";", base: int = 0,
                    text: str | None = None):
    """Parse a separated element list; errors point at the offending column."""
    text = cfg.get(key, "") if text is None else text
    out = []
    for piece, start in split_top_level(text, sep):
        if not piece.strip():
            continue
        try:
            out.append(algebra.parse(piece))
        except ElementParseError as exc:
            col = (exc.column or 1) - 1
            raise cfg.error(key, str(exc).split(": ", 1)[-1], base + start + col) from None
    return out


def parse_function(cfg: RunConfig, algebra):
    text = cfg.get("function")
    if text is None:
        raise ConfigError("function is required")
    kind, _, rest = text.partition(":")
    if kind == "poly":
        body = rest.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise cfg.error("function", "poly expects a bracketed coefficient list", len(kind) + 1)
        coeffs = _parse_elements(cfg, "function", algebra, sep=",",
                                 base=text.index("[") + 1, text=body[1:-1])
        if not coeffs:
            raise cfg.error("function", "empty coefficient list")
        return SliceRegularPolynomial(coeffs)
    if kind == "stem":
        name = rest.strip()
        if name == "remark":
            return CoordinateDatum(algebra)
        if name not in STEMS:
            raise cfg.error("function", f"unknown stem {name!r}", len(kind) + 1)
        return STEMS[name](algebra)
    raise cfg.error("function", f"unknown function kind {kind!r}")


def parse_grid(cfg: RunConfig) -> QuadratureGrid:
    text = cfg.get("grid")
    if text is None:
        return QuadratureGrid()
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise cfg.error("grid", "grid sizes must be integers") from None
    if len(vals) not in (2, 4):
        raise cfg.error("grid", "expected Nt,Ntheta or Nt,Ntheta,Nr,Ns")
    names = ("n_t", "n_theta", "n_r", "n_s")
    try:
        return QuadratureGrid(**dict(zip(names, vals)))
    except ValueError as exc:
        raise cfg.error("grid", str(exc)) from None


def _float_list(cfg, key):
    text = cfg.get(key)
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise cfg.error(key, "expected comma-separated numbers") from None


def _float(cfg, key, default):
    text = cfg.get(key)
    if text is None:
        return default
    try:
        return float(text)
    except ValueError:
        raise cfg.error(key, "expected a number") from None


def _int(cfg, key, default):
    text = cfg.get(key)
    if text is None:
        return default
    try:
        return int(text)
    except ValueError:
        raise cfg.error(key, "expected an integer") from None


def _bool(cfg, key, default):
    text = cfg.get(key)
    if text is None:
        return default
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise cfg.error(key, "expected true or false")


def _setup(cfg: RunConfig):
    try:
        algebra = get_algebra(cfg.get("algebra", "quaternion"))
    except ValueError as exc:
        raise cfg.error("algebra", str(exc)) from None
    try:
        gis = parse_gis(cfg.get("gis", "full"), algebra)
        gis.validate()
    except (ValueError, ElementParseError) as exc:
        raise cfg.error("gis", str(exc)) from None
    try:
        domain = parse_domain(cfg.get("domain", "disk:0,1"))
    except ValueError as exc:
        raise cfg.error("domain", str(exc)) from None
    return algebra, gis, domain


# -- output ------------------------------------------------------------------------

def fmt_float(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else "%.17g" % v


def fmt_elem(x) -> str:
    return "" if x is None else format_element(x)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def run_points(fn, items):
    """Apply ``fn`` to ``items`` with the configured parallelism; results in input order."""
    n = min(thread_count(), max(1, len(items)))
    if n == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def write_table(cfg: RunConfig, meta: dict, header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    out = cfg.get("out")
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _meta(cfg: RunConfig, extra=None):
    meta = {"command": cfg.command, "version": __version__, "numpy": np.__version__}
    for key in ("algebra", "gis", "domain", "function", "grid"):
        if cfg.get(key) is not None:
            meta[key] = cfg.get(key)
    meta.update(extra or {})
    return meta


def _errors(ref: Element, got: Element):
    abs_err = float(np.linalg.norm((got - ref).coeffs))
    scale = float(np.linalg.norm(ref.coeffs))
    return abs_err, (abs_err / scale if scale > 0 else abs_err)


# -- commands ------------------------------------------------------------------------

def cmd_verify_cauchy(cfg: RunConfig):
    algebra, gis, domain = _setup(cfg)
    f = parse_function(cfg, algebra)
    if isinstance(f, CoordinateDatum):
        raise cfg.error("function", "stem:remark is boundary data only; use verify-jump")
    grid = parse_grid(cfg)
    points = _parse_elements(cfg, "points", algebra)
    regular = getattr(f, "slice_regular", False)
    tol = _float(cfg, "tol", 1e-5 if regular else 1e-3)
    timing = _bool(cfg, "timing", False)

    def work(x):
        t0 = time.perf_counter()
        ref = Element(algebra, evaluate_function(f, x.coeffs))
        try:
            res = cauchy_reconstruct(gis, domain, f, x, grid, estimate_error=False)
        except ValueError as exc:
            return x, ref, None, None, None, {}, time.perf_counter() - t0, str(exc)
        a, r = _errors(ref, res.combined)
        return x, ref, res.combined, a, r, res.node_counts, time.perf_counter() - t0, ""

    header = ["point", "reference", "computed", "abs_error", "rel_error",
              "boundary_nodes", "volume_nodes"] + (["wall_time_s"] if timing else []) + ["pass", "note"]
    rows, ok = [], True
    for x, ref, got, a, r, counts, wall, note in run_points(work, points):
        passed = got is not None and r < tol
        ok &= passed
        row = [fmt_elem(x), fmt_elem(ref), fmt_elem(got), fmt_float(a), fmt_float(r),
               str(counts.get("boundary", 0)), str(counts.get("volume", 0))]
        row += [fmt_float(wall)] if timing else []
        rows.append(row + [str(passed).lower(), note])
    write_table(cfg, _meta(cfg, {"tol": fmt_float(tol)}), header, rows)
    return ok


def _offsets_and_grid(cfg):
    offsets = _float_list(cfg, "offsets")
    grid = parse_grid(cfg) if cfg.get("grid") is not None else None
    return offsets, grid


def cmd_verify_jump(cfg: RunConfig):
    algebra, gis, domain = _setup(cfg)
    f = parse_function(cfg, algebra)
    offsets, grid = _offsets_and_grid(cfg)
    points = _parse_elements(cfg, "points", algebra)
    tol = _float(cfg, "tol", 5e-4)
    timing = _bool(cfg, "timing", False)

    def work(x):
        t0 = time.perf_counter()
        try:
            rep = jump_check(gis, domain, f, x, grid, offsets)
        except ValueError as exc:
            return x, None, time.perf_counter() - t0, str(exc)
        return x, rep, time.perf_counter() - t0, "" if rep.monotone else "non-monotone extrapolation"

    header = ["point", "reference", "computed", "abs_error", "rel_error", "f_plus", "f_minus",
              "offsets"] + (["wall_time_s"] if timing else []) + ["pass", "note"]
    rows, ok = [], True
    for x, rep, wall, note in run_points(work, points):
        if rep is None:
            row = [fmt_elem(x), "", "", "nan", "nan", "", "", ""]
            passed = False
        else:
            a, r = _errors(rep.value, rep.jump)
            passed = rep.residual < tol
            row = [fmt_elem(x), fmt_elem(rep.value), fmt_elem(rep.jump), fmt_float(a),
                   fmt_float(r), fmt_elem(rep.f_plus), fmt_elem(rep.f_minus),
                   " ".join(fmt_float(o) for o in rep.offsets)]
        ok &= passed
        row += [fmt_float(wall)] if timing else []
        rows.append(row + [str(passed).lower(), note])
    write_table(cfg, _meta(cfg, {"tol": fmt_float(tol)}), header, rows)
    return ok


def cmd_extension_test(cfg: RunConfig):
    algebra, gis, domain = _setup(cfg)
    f = parse_function(cfg, algebra)
    offsets, grid = _offsets_and_grid(cfg)
    probes = _parse_elements(cfg, "points", algebra) or None
    tol = _float(cfg, "tol", 1e-3)
    expect = cfg.get("expect")
    if expect is not None and expect not in ("true", "false"):
        raise cfg.error("expect", "expected true or false")
    try:
        res = extension_test(gis, domain, f, grid, probes, tol, offsets)
    except ValueError as exc:
        raise cfg.error("points", str(exc)) from None
    from .jump import boundary_points_on_plane

    shown = probes or boundary_points_on_plane(gis, domain)
    header = ["point", "f_minus_limit", "f_minus_norm", "vanishes"]
    rows = []
    for p, F in zip(shown, res.minus_limits):
        norm = float(np.linalg.norm(F.coeffs))
        rows.append([fmt_elem(p), fmt_elem(F), fmt_float(norm), str(norm < tol).lower()])
    ok = expect is None or (expect == str(res.extends).lower())
    meta = _meta(cfg, {"tol": fmt_float(tol), "extends": str(res.extends).lower(),
                       "max_f_minus_norm": fmt_float(res.max_minus_norm)})
    if expect is not None:
        meta["expect"] = expect
    write_table(cfg, meta, header, rows)
    return ok


def cmd_lemma_suite(cfg: RunConfig):
    n_max = _int(cfg, "n_max", 4)
    if not 1 <= n_max <= 4:
        raise cfg.error("n_max", "n must lie in 1..4")
    samples = _int(cfg, "samples", 100)
    rng = np.random.default_rng(_int(cfg, "seed", 0))
    header = ["check", "n", "reference", "computed", "abs_error", "pass"]
    rows, ok = [], True

    def add(name, n, ref, got, tol):
        nonlocal ok
        err = abs(got - ref)
        passed = err <= tol
        ok &= passed
        rows.append([name, str(n), fmt_float(ref), fmt_float(got), fmt_float(err),
                     str(passed).lower()])

    for n in range(1, n_max + 1):
        box = np.array(parameter_box(n))
        thetas = box[:, 0] + rng.uniform(0.0, 1.0, size=(samples, n)) * (box[:, 1] - box[:, 0])
        worst_det = worst_gram = 0.0
        for th in thetas:
            In = float(jacobian_In(n, th))
            worst_det = max(worst_det, abs(jacobian_In_det(n, th) - In))
            worst_gram = max(worst_gram, abs(jacobian_In_gram(n, th) - In))
        add("product_vs_det", n, 0.0, worst_det, 1e-6)
        add("product_vs_gram", n, 0.0, worst_gram, 1e-6)
        nodes, weights = theta_grid(n, 16)
        integral = math.fsum(weights * jacobian_In(n, nodes))
        add("integral_In", n, sphere_volume(n) / 2, integral, 1e-8)
    write_table(cfg, _meta(cfg, {"samples": samples}), header, rows)
    return ok


def kernel_reference(gis: Gis, x: Element, w: Element) -> Element:
    """``C_S(x, w)`` from the representation formula and complex arithmetic in the plane of ``w``."""
    alg = gis.algebra
    dw = decompose(w)
    dx = decompose(x)
    J = dw.J if dw.J is not None else Element(alg, gis.basis_matrix[1])
    I = dx.J if dx.J is not None else J
    wz = complex(dw.alpha, dw.beta)
    vals = []
    for z in (complex(dx.alpha, dx.beta), complex(dx.alpha, -dx.beta)):
        q = 1.0 / (wz - z)
        vals.append(alg.scalar(q.real) + J * q.imag)
    c = 0.5 * (vals[0] + vals[1]) - 0.5 * ((I * J) * (vals[0] - vals[1]))
    if gis.m > 2:
        c = c * (2.0 / sphere_volume(gis.m - 2) / dw.beta ** (gis.m - 2))
    return c


def cmd_kernel_eval(cfg: RunConfig):
    algebra, gis, _ = _setup(cfg)
    if cfg.get("w") is None:
        raise ConfigError("w is required for kernel-eval")
    ws = _parse_elements(cfg, "w", algebra)
    points = _parse_elements(cfg, "points", algebra)
    if len(ws) == 1:
        ws = ws * len(points)
    if len(ws) != len(points):
        raise cfg.error("w", "give one w or one per point")
    tol = _float(cfg, "tol", 1e-12)
    header = ["point", "w", "reference", "computed", "abs_error", "rel_error", "pass", "note"]
    rows, ok = [], True
    for x, w in zip(points, ws):
        try:
            got = kernel_CS(gis, x, w)
            ref = kernel_reference(gis, x, w)
        except ValueError as exc:
            ok = False
            rows.append([fmt_elem(x), fmt_elem(w), "", "", "nan", "nan", "false", str(exc)])
            continue
        a, r = _errors(ref, got)
        passed = r < tol
        ok &= passed
        rows.append([fmt_elem(x), fmt_elem(w), fmt_elem(ref), fmt_elem(got), fmt_float(a),
                     fmt_float(r), str(passed).lower(), ""])
    write_table(cfg, _meta(cfg, {"tol": fmt_float(tol)}), header, rows)
    return ok


HANDLERS = {
    "verify-cauchy": cmd_verify_cauchy,
    "verify-jump": cmd_verify_jump,
    "extension-test": cmd_extension_test,
    "lemma-suite": cmd_lemma_suite,
    "kernel-eval": cmd_kernel_eval,
}


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slice-cauchy",
                                description="Numerical checks of slice Cauchy formulas.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--algebra", help="quaternion | clifford:n")
    p.add_argument("--gis", help="full | paravector | plane:<unit>")
    p.add_argument("--domain", help="disk:c,r | annulus:c,r1,r2 | ellipse:c,ax,ay")
    p.add_argument("--function", help="poly:[a0,a1,...] | stem:identity|conj|normsq|remark")
    p.add_argument("--points", help="semicolon-separated elements")
    p.add_argument("--grid", help="Nt,Ntheta[,Nr,Ns]")
    p.add_argument("--tol", help="pass threshold")
    p.add_argument("--offsets", help="approach offsets for boundary limits, decreasing")
    p.add_argument("--expect", help="extension-test: expected verdict (true|false)")
    p.add_argument("--w", help="kernel-eval: second kernel argument(s)")
    p.add_argument("--n-max", dest="n_max", help="lemma-suite: largest sphere dimension")
    p.add_argument("--samples", help="lemma-suite: random angles per dimension")
    p.add_argument("--seed", help="lemma-suite: RNG seed")
    p.add_argument("--timing", action="store_const", const="true",
                   help="add a wall-time column (output is then not reproducible)")
    return p


def load_config(args) -> RunConfig:
    values, source = {}, "<config>"
    if args.config:
        source = args.config
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = parse_config_text(fh.read(), source)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key in CONFIG_KEYS - {"command"}:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = ConfigValue(flag)
    cfg_cmd = values.get("command")
    if cfg_cmd is not None and cfg_cmd.text not in COMMANDS:
        raise ConfigError(f"unknown command {cfg_cmd.text!r}", cfg_cmd.line, cfg_cmd.column, source)
    return RunConfig(args.command, values, source)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        ok = HANDLERS[cfg.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
