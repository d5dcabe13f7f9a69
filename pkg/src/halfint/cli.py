"""Command line entry point.

    halfint [--config FILE] [--cache-dir DIR] [--seed S] [--format json|csv] COMMAND key=value ...

Commands: form-build, cusp-extract, expsum-verify, voronoi-compare,
voronoi-scan, signs-count, signs-windows, stats-meansq.

Exit codes: 0 ok, 1 verification failure, 2 cache/environment error, 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io, signs, verify, voronoi
from .cusp import ToleranceError, build_cusp_triple
from .qforms import EigencheckError, build_desk_form

EXIT_OK, EXIT_FAIL, EXIT_ENV, EXIT_INPUT = 0, 1, 2, 3

# allowed key=value arguments per command with their types
COMMAND_KEYS = {
    "form-build": {"N": int},
    "cusp-extract": {"N": int, "y0": float, "S": int, "n_max": int},
    "expsum-verify": {"case": str, "bound": int, "seed": int},
    "voronoi-compare": {"x": float, "M": int, "d": int, "Q": int, "a": int, "N": int,
                        "dual": str, "constant": int},
    "voronoi-scan": {"x_grid": str, "M_grid": str, "d": int, "a": int, "N": int,
                     "dual": str, "constant": int},
    "signs-count": {"set": str, "x": float, "a": int, "Q": int, "N": int},
    "signs-windows": {"x0": int, "x1": int, "c0": float, "a": int, "Q": int, "N": int},
    "stats-meansq": {"grid": str, "N": int, "which": str},
}
CONFIG_KEYS = {"N", "y0", "S", "n_max", "seed"}


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code, self.kind = code, kind


def parse_kv(tokens: list[str], allowed: dict) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise io.BadInput(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        if key not in allowed:
            raise io.BadInput(f"unknown key {key!r}; allowed: {', '.join(sorted(allowed))}")
        try:
            out[key] = allowed[key](value)
        except ValueError:
            raise io.BadInput(f"{key}={value!r} is not a valid {allowed[key].__name__}") from None
    return out


def _grid(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.split(",") if v]
    except ValueError:
        raise io.BadInput(f"bad grid {text!r}") from None


# ---------------------------------------------------------------------------
# commands; each returns (report dict, csv text or None, exit code)


def cmd_form_build(cfg, kv):
    form = build_desk_form(cfg.N)
    path = io.save_form(form, cfg)
    report = {"command": "form-build", "N": form.N, "ell": form.ell, "source": form.source_tag,
              "eigenvalues": {str(p): w for p, w in form.eigenvalues.items()},
              "cache": str(path)}
    return report, None, EXIT_OK


def cmd_cusp_extract(cfg, kv):
    form = io.load_form(cfg)
    triple = build_cusp_triple(form, cfg.contour, n_max=cfg.n_max)
    paths = io.save_triple(triple, cfg)
    report = {"command": "cusp-extract", "N": cfg.N, "y0": cfg.y0, "S": cfg.S, "n_max": cfg.n_max,
              "kinds": triple.kinds, "max_err_g": float(triple.err_g[1:].max()),
              "max_err_h_extracted": float(triple.h_extracted_err[1:].max()),
              "cache": [str(p) for p in paths]}
    return report, None, EXIT_OK


def cmd_expsum_verify(cfg, kv):
    case = kv.get("case", "a")
    bound = kv.get("bound")
    seed = kv.get("seed", cfg.seed)
    if case in ("a", "b", "c", "d", "e"):
        reports = verify.verify_sum_identities(case, bound, seed=seed)
    elif case == "rootsum":
        reports = [verify.verify_root_sums()]
    elif case == "kform":
        reports = [verify.verify_kform(bound or 200, seed=seed)]
    elif case == "kbound":
        reports = [verify.verify_kbound(bound or 300, seed=seed)]
    elif case == "twist":
        reports = [verify.verify_twist(bound or 99)]
    else:
        raise io.BadInput(f"unknown case {case!r}")
    passed = all(r["passed"] for r in reports)
    report = {"command": "expsum-verify", "case": case, "reports": reports, "passed": passed}
    return report, None, EXIT_OK if passed else EXIT_FAIL


def _voronoi_flags(kv):
    dual = kv.get("dual", "reflected")
    if dual not in voronoi.DUALS:
        raise io.BadInput(f"dual must be one of {voronoi.DUALS}")
    return dual, bool(kv.get("constant", 0))


def cmd_voronoi_compare(cfg, kv):
    if "x" not in kv:
        raise io.BadInput("voronoi-compare needs x=")
    triple = io.load_triple(cfg)
    dual, constant = _voronoi_flags(kv)
    M = kv.get("M", 256)
    a = kv.get("a", 0)
    if "Q" in kv:
        params = voronoi.VoronoiParams(kv["x"], M, kv["Q"], a % kv["Q"], cfg.ell, cfg.rho, dual, constant)
        rep = voronoi.compare_progression(params, triple)
    else:
        d = kv.get("d", 1)
        params = voronoi.VoronoiParams(kv["x"], M, d, a, cfg.ell, cfg.rho, dual, constant)
        rep = voronoi.compare(params, triple)
    row = rep.row()
    report = {"command": "voronoi-compare", "row": row, "in_theorem_range": params.in_theorem_range,
              "dual": dual, "constant": constant}
    csv = io.rows_to_csv([row], ["x", "M", "d", "a", "main_term", "direct_value", "residual"])
    return report, csv, EXIT_OK


def cmd_voronoi_scan(cfg, kv):
    triple = io.load_triple(cfg)
    dual, constant = _voronoi_flags(kv)
    xs = _grid(kv.get("x_grid", "1000.5,4000.5,10000.5"))
    Ms = _grid(kv.get("M_grid", "64,128,256,512,1024,2048,4096"), int)
    d, a = kv.get("d", 1), kv.get("a", 0)
    rows = voronoi.residual_scan(xs, Ms, d, a, triple, cfg.ell, dual, constant)
    slopes = voronoi.residual_slopes(rows) if len(Ms) > 1 else {}
    report = {"command": "voronoi-scan", "d": d, "a": a, "dual": dual, "constant": constant,
              "slopes": {repr(x): s for x, s in slopes.items()},
              "grid_median_slope": voronoi.grid_residual_slope(rows) if len(Ms) > 1 else None,
              "rows": rows}
    csv = io.rows_to_csv(rows, ["x", "M", "d", "a", "main", "direct", "residual"])
    return report, csv, EXIT_OK


def cmd_signs_count(cfg, kv):
    form = io.load_form(cfg)
    kind = kv.get("set", "all")
    x = kv.get("x", float(form.N))
    Q = kv.get("Q", 1)
    index = signs.IndexSet(kind, min(form.N, int(math.floor(x))), kv.get("a", 0) % Q, Q)
    rep = signs.sign_changes_on(form.lam, index, x)
    report = {"command": "signs-count", "kind": kind, "x": x, "Q": Q, "a": index.a,
              "count": rep.count}
    csv = io.rows_to_csv([{"i": i, "j": j} for i, j in rep.intervals], ["i", "j"])
    return report, csv, EXIT_OK


def cmd_signs_windows(cfg, kv):
    form = io.load_form(cfg)
    Q, a = kv.get("Q", 1), kv.get("a", 0)
    if Q % 2 == 0:
        raise io.BadInput("window scans are defined for odd Q")
    x0, x1 = kv.get("x0", 1000), kv.get("x1", form.N)
    rep = signs.window_scan(x0, x1, kv.get("c0", 1.0), a, Q, form.lam)
    case = signs.theorem_case(Q, a % Q)
    rep.update({"command": "signs-windows", "theorem_case": case or "outside theorem hypotheses"})
    return rep, None, EXIT_OK


def cmd_stats_meansq(cfg, kv):
    triple = io.load_triple(cfg) if kv.get("which", "f") != "f" else None
    form = io.load_form(cfg) if triple is None else None
    which = kv.get("which", "f")
    lam = form.lam if form is not None else {"h": triple.lam_h, "g": triple.lam_g}.get(which)
    if lam is None:
        raise io.BadInput("which must be f, g or h")
    top = len(lam) - 1
    grid = _grid(kv["grid"]) if "grid" in kv else list(np.logspace(1, math.log10(top), 15))
    rep = signs.meansq_fit(lam, grid)
    rep.update({"command": "stats-meansq", "which": which})
    return rep, None, EXIT_OK


COMMANDS = {
    "form-build": cmd_form_build,
    "cusp-extract": cmd_cusp_extract,
    "expsum-verify": cmd_expsum_verify,
    "voronoi-compare": cmd_voronoi_compare,
    "voronoi-scan": cmd_voronoi_scan,
    "signs-count": cmd_signs_count,
    "signs-windows": cmd_signs_windows,
    "stats-meansq": cmd_stats_meansq,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halfint", description="Half-integral weight coefficient toolkit.")
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--cache-dir", help=f"cache directory (default ${io.CACHE_ENV} or {io.DEFAULT_CACHE})")
    p.add_argument("--seed", type=int, help="seed for sampled sweeps")
    p.add_argument("--format", choices=["json", "csv"], help="output format")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("args", nargs="*", help="key=value arguments")
    return p


def _error(code: int, kind: str, message: str) -> int:
    payload = {"error": {"kind": kind, "message": message}, "exit_code": code}
    print(io.dumps_report(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        kv = parse_kv(ns.args, COMMAND_KEYS[ns.command])
        text = None
        if ns.config:
            try:
                with open(ns.config) as fh:
                    text = fh.read()
            except OSError as exc:
                return _error(EXIT_ENV, "config_unreadable", str(exc))
        overrides = {k: v for k, v in kv.items() if k in CONFIG_KEYS}
        if ns.cache_dir:
            overrides["cache_dir"] = ns.cache_dir
        if ns.seed is not None:
            overrides["seed"] = ns.seed
        if ns.format:
            overrides["format"] = ns.format
        cfg = io.make_config(text, overrides)
        report, csv, code = COMMANDS[ns.command](cfg, kv)
    except io.CacheMissing as exc:
        return _error(EXIT_ENV, "cache_missing", f"{exc} not found; run form-build / cusp-extract first")
    except (io.BadInput, ValueError) as exc:
        return _error(EXIT_INPUT, "bad_input", str(exc))
    except (EigencheckError, ToleranceError) as exc:
        return _error(EXIT_FAIL, "verification_failed", str(exc))
    if cfg.format == "csv" and csv is not None:
        sys.stdout.write(csv)
    else:
        print(io.dumps_report(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
