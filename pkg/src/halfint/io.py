"""Coefficient caches, run configuration and report serialization.

Cache files are plain CSV with a one-line header comment

    # halfint ell=4 N=100000 source=eta(2z)^12*theta(z)^-3 kind=exact

followed by ``n,lambda_re,lambda_im,abs_err`` rows. Floats are written with
17 significant digits so a write/read cycle reproduces every value bit for bit.
Writers hold a file lock next to the target.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from filelock import FileLock

from .cusp import ContourSpec, CuspTriple
from .qforms import HalfIntegralForm

SCHEMA_VERSION = 1
CACHE_ENV = "HALFINT_CACHE_DIR"
DEFAULT_CACHE = ".halfint_cache"
COLUMNS = "n,lambda_re,lambda_im,abs_err"


class CacheMissing(FileNotFoundError):
    pass


class BadInput(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    ell: int = 4
    N: int = 100_000
    rho: float = 1 / 6
    y0: float = 0.02
    S: int = 4096
    n_max: int = 50
    cache_dir: str = ""
    format: str = "json"
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.ell != 4:
            raise BadInput("only the desk form with ell=4 is available")
        if not 25 <= self.N <= 10 ** 7:
            raise BadInput("N must lie in [25, 10^7]")
        if not 0 < self.rho <= 0.5:
            raise BadInput("rho must lie in (0, 1/2]")
        if self.y0 <= 0:
            raise BadInput("y0 must be positive")
        if self.S < 8 or self.S & (self.S - 1):
            raise BadInput("S must be a power of two >= 8")
        if not 1 <= self.n_max <= self.S // 4:
            raise BadInput("n_max must lie in [1, S/4]")
        if self.format not in ("json", "csv"):
            raise BadInput("format must be json or csv")
        return self

    @property
    def contour(self) -> ContourSpec:
        return ContourSpec(y0=self.y0, S=self.S)

    def cache_path(self) -> Path:
        return Path(self.cache_dir or os.environ.get(CACHE_ENV) or DEFAULT_CACHE)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise BadInput(f"{key}={value!r}: {exc}") from None
    return value


def parse_config_text(text: str) -> dict:
    """Flat key=value lines; '#' starts a comment. Unknown keys are rejected."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadInput(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise BadInput(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def make_config(file_text: str | None = None, overrides: dict | None = None) -> RunConfig:
    values = parse_config_text(file_text) if file_text else {}
    for key, value in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise BadInput(f"unknown config key {key!r}")
        values[key] = _coerce(key, str(value)) if isinstance(value, str) else value
    return RunConfig(**values).validate()


# ---------------------------------------------------------------------------
# coefficient caches


def _fmt(x: float) -> str:
    return "%.17g" % x


def _header(**meta) -> str:
    return "# halfint " + " ".join(f"{k}={v}" for k, v in meta.items())


def write_coeff_csv(path: Path, lam, err=None, **meta) -> Path:
    """Write n, Re, Im, err rows for n >= 1 under a lock."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lam = np.asarray(lam)
    err = np.zeros(len(lam)) if err is None else np.asarray(err, dtype=float)
    lines = [_header(**meta), COLUMNS]
    for n in range(1, len(lam)):
        z = complex(lam[n])
        lines.append(f"{n},{_fmt(z.real)},{_fmt(z.imag)},{_fmt(float(err[n]))}")
    with FileLock(str(path) + ".lock"):
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        os.replace(tmp, path)
    return path


def read_coeff_csv(path: Path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Return (header fields, complex lam with lam[0] = 0, err)."""
    path = Path(path)
    if not path.exists():
        raise CacheMissing(str(path))
    with FileLock(str(path) + ".lock"):
        text = path.read_text().splitlines()
    if not text or not text[0].startswith("# halfint "):
        raise BadInput(f"{path}: missing halfint header")
    meta = dict(item.split("=", 1) for item in text[0][len("# halfint "):].split())
    if text[1] != COLUMNS:
        raise BadInput(f"{path}: unexpected columns {text[1]!r}")
    rows = [line.split(",") for line in text[2:] if line]
    lam = np.zeros(len(rows) + 1, dtype=complex)
    err = np.zeros(len(rows) + 1)
    for k, (n, re, im, e) in enumerate(rows, 1):
        if int(n) != k:
            raise BadInput(f"{path}: row {k} has index {n}")
        lam[k] = complex(float(re), float(im))
        err[k] = float(e)
    return meta, lam, err


def form_cache_file(cfg: RunConfig) -> Path:
    return cfg.cache_path() / f"form_ell{cfg.ell}_N{cfg.N}.csv"


def cusp_cache_file(cfg: RunConfig, which: str) -> Path:
    return cfg.cache_path() / f"cusp_{which}_ell{cfg.ell}_N{cfg.N}_y{cfg.y0:g}_S{cfg.S}_n{cfg.n_max}.csv"


def save_form(form: HalfIntegralForm, cfg: RunConfig) -> Path:
    return write_coeff_csv(form_cache_file(cfg), form.lam, None, ell=form.ell, N=form.N,
                           source=form.source_tag, kind=form.kind)


def load_form(cfg: RunConfig) -> HalfIntegralForm:
    meta, lam, _ = read_coeff_csv(form_cache_file(cfg))
    return HalfIntegralForm(int(meta["ell"]), int(meta["N"]), lam.real.copy(), meta["source"])


def save_triple(triple: CuspTriple, cfg: RunConfig) -> list[Path]:
    base = dict(ell=triple.ell, N=triple.N)
    return [
        write_coeff_csv(cusp_cache_file(cfg, "g"), triple.lam_g, triple.err_g, **base,
                        source="cusp-1/2", kind=triple.kinds["g"]),
        write_coeff_csv(cusp_cache_file(cfg, "h"), triple.h_extracted, triple.h_extracted_err,
                        **base, source="cusp0", kind=triple.kinds["h"]),
    ]


def load_triple(cfg: RunConfig) -> CuspTriple:
    """Rebuild the triple from the form cache and the two cusp caches."""
    form = load_form(cfg)
    meta_g, g, g_err = read_coeff_csv(cusp_cache_file(cfg, "g"))
    meta_h, h, h_err = read_coeff_csv(cusp_cache_file(cfg, "h"))
    lam_f = np.array(form.lam, dtype=float)
    if meta_h["kind"] == "exact(fricke)":
        lam_h, err_h = lam_f.copy(), np.zeros_like(lam_f)
    else:
        lam_h, err_h = h.real.copy(), h_err.copy()
    return CuspTriple(
        ell=form.ell, lam_f=lam_f, lam_h=lam_h, err_h=err_h, lam_g=g.real.copy(), err_g=g_err,
        N_cusp=len(g) - 1, kinds={"f": "exact", "g": meta_g["kind"], "h": meta_h["kind"]},
        h_extracted=h, h_extracted_err=h_err, contour=cfg.contour)


# ---------------------------------------------------------------------------
# reports


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_report(obj: dict) -> str:
    """Deterministic JSON with a schema_version field."""
    payload = dict(_plain(obj))
    payload.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(payload, sort_keys=True, indent=1)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    out = [",".join(columns)]
    for r in rows:
        out.append(",".join(_fmt(r[c]) if isinstance(r[c], float) else str(r[c]) for c in columns))
    return "\n".join(out) + "\n"
