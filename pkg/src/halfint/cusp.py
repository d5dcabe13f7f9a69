"""Expansions of the desk form at the cusps -1/2 and 0.

The transformed functions

    h(z) = (-2iz)^{-(l+1/2)} f(-1/(4z))
    g(z) = (-8z+1)^{-(l+1/2)} f(4z/(-8z+1))        (g already divided by 2^{l+1/2})

are sampled on a horizontal segment Im z = y0 and their Fourier coefficients
recovered by FFT. Errors are worst-case bounds: q-series tail, floating-point
rounding in the Horner evaluation, FFT rounding and aliasing, all amplified
by e^{2 pi n y0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qforms import DESK_QUOTIENT, HalfIntegralForm

EPS = np.finfo(float).eps


class ToleranceError(RuntimeError):
    """Requested accuracy cannot be certified with the available data."""


@dataclass(frozen=True)
class ContourSpec:
    y0: float = 0.02
    S: int = 4096
    tail_bound: float = 1e-13

    def __post_init__(self):
        if self.y0 <= 0:
            raise ValueError("y0 must be positive")
        if self.S < 8 or self.S & (self.S - 1):
            raise ValueError("S must be a power of two >= 8")
        if self.tail_bound <= 0:
            raise ValueError("tail_bound must be positive")


def growth_constant(form: HalfIntegralForm, safety: float = 2.0) -> float:
    """A with |a(n)| <= A n^{l/2+1/4}, fitted on the known range with a safety factor.

    The exponent is the rho = 1/2 case of the squarefree/square decomposition
    bound; the constant itself is empirical.
    """
    n = np.arange(1, form.N + 1, dtype=float)
    # |a(n)| / n^{l/2+1/4} = |lam(n)| / n^{1/2}
    return safety * float(np.max(np.abs(form.lam[1:]) / np.sqrt(n)))


def _tail(A: float, s: float, y: float, K: int) -> float:
    # sum_{n > K} A n^s e^{-2 pi n y} via a geometric majorant
    r = math.exp(-2 * math.pi * y)
    ratio = ((K + 2) / (K + 1)) ** s * r
    if ratio >= 1:
        return math.inf
    return A * (K + 1) ** s * r ** (K + 1) / (1 - ratio)


def truncation_order(form: HalfIntegralForm, y_min: float, tol: float, A: float | None = None) -> int:
    """Smallest K <= N whose tail beyond K is below tol at every Im z >= y_min."""
    if y_min <= 0:
        raise ToleranceError("evaluation point not in the upper half-plane")
    A = growth_constant(form) if A is None else A
    s = form.ell / 2 + 0.25
    K = max(1, int(s / (2 * math.pi * y_min)) + 1)
    while _tail(A, s, y_min, K) > tol:
        K = int(K * 1.25) + 1
        if K > form.N:
            raise ToleranceError(
                f"tail bound {tol:g} needs more than N={form.N} terms at Im z = {y_min:g}")
    lo, hi = max(1, int(s / (2 * math.pi * y_min)) + 1), K
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail(A, s, y_min, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return hi


def eval_f_many(z, form: HalfIntegralForm, tol: float = 1e-13, A: float | None = None):
    """Values f(z) and absolute error bounds for an array of points."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    y_min = float(z.imag.min())
    K = truncation_order(form, y_min, tol, A)
    n = np.arange(K + 1, dtype=float)
    coef = np.zeros(K + 1)
    coef[1:] = form.lam[1 : K + 1] * n[1:] ** (form.ell / 2 - 0.25)
    q = np.exp(2j * np.pi * z)
    acc = np.zeros_like(q)
    for c in coef[:0:-1]:
        acc = acc * q + c
    val = acc * q
    # Horner rounding: about 2K ulps of the absolutely summed series
    absq = np.abs(q)
    absum = np.zeros_like(absq)
    for c in np.abs(coef[:0:-1]):
        absum = absum * absq + c
    absum *= absq
    err = tol + 4 * (K + 1) * EPS * absum
    return val, err


def eval_f(z: complex, form: HalfIntegralForm, tol: float = 1e-13) -> complex:
    """f(z) with absolute error at most tol plus the (tiny) rounding term."""
    val, _ = eval_f_many([z], form, tol)
    return complex(val[0])


def transform_h_many(z, form: HalfIntegralForm, tol: float = 1e-13, A=None):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = -1 / (4 * z)
    fw, ferr = eval_f_many(w, form, tol, A)
    pref = np.power(-2j * z, -(form.ell + 0.5))
    val = pref * fw
    return val, np.abs(pref) * ferr + 8 * EPS * np.abs(val)


def transform_g_many(z, form: HalfIntegralForm, tol: float = 1e-13, A=None):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    base = -8 * z + 1
    if np.any(base.imag >= 0):
        raise ToleranceError("-8z+1 leaves the lower half-plane; principal branch not continuous")
    w = 4 * z / base
    fw, ferr = eval_f_many(w, form, tol, A)
    pref = np.power(base, -(form.ell + 0.5))
    val = pref * fw
    return val, np.abs(pref) * ferr + 8 * EPS * np.abs(val)


def transform_h(z: complex, form: HalfIntegralForm, tol: float = 1e-13) -> complex:
    return complex(transform_h_many([z], form, tol)[0][0])


def transform_g(z: complex, form: HalfIntegralForm, tol: float = 1e-13) -> complex:
    return complex(transform_g_many([z], form, tol)[0][0])


# window start per function; g is sampled over a period centred on its pole-free
# point x = 1/8 so that the pulled-back heights stay >= y0/4
_X_OFFSET = {"f": -0.5, "h": -0.5, "g": 0.125 - 0.5}


def extract_coeffs(which: str, n_max: int, contour: ContourSpec, form: HalfIntegralForm,
                   tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Recover lam(n), 1 <= n <= n_max, for which in {f, g, h} by FFT on Im z = y0.

    Returns complex lam (index 0 unused) and per-coefficient error bounds. If
    ``tol`` is given, raises ToleranceError when any err(n) exceeds it.
    """
    if which not in _X_OFFSET:
        raise ValueError(f"unknown expansion {which!r}")
    S, y0 = contour.S, contour.y0
    if n_max > S // 4:
        raise ValueError(f"n_max={n_max} exceeds S/4={S // 4}")
    x_off = _X_OFFSET[which]
    z = x_off + np.arange(S) / S + 1j * y0
    A = growth_constant(form)
    if which == "f":
        vals, errs = eval_f_many(z, form, contour.tail_bound, A)
    elif which == "h":
        vals, errs = transform_h_many(z, form, contour.tail_bound, A)
    else:
        vals, errs = transform_g_many(z, form, contour.tail_bound, A)
    if not np.all(np.isfinite(vals)):
        raise ToleranceError("non-finite samples")
    spec = np.fft.fft(vals) / S
    n = np.arange(n_max + 1)
    amp = np.exp(2 * np.pi * n * y0)
    raw = amp * np.exp(-2j * np.pi * n * x_off) * spec[: n_max + 1]
    s = form.ell / 2 + 0.25
    # aliasing from n + jS, j >= 1, under the same growth bound
    alias = np.array([
        sum(A * (k + j * S) ** s * math.exp(-2 * math.pi * j * S * y0) for j in range(1, 4))
        for k in n])
    fft_round = 5 * math.log2(S) * EPS * float(np.max(np.abs(vals)))
    sample_err = float(np.max(errs))
    total = amp * (sample_err + fft_round) + alias
    norm = np.ones(n_max + 1)
    norm[1:] = n[1:] ** (form.ell / 2 - 0.25)
    lam = raw / norm
    err = total / norm
    lam[0], err[0] = 0, 0
    if tol is not None and np.any(err[1:] > tol):
        bad = int(np.argmax(err[1:] > tol)) + 1
        raise ToleranceError(f"err({bad}) = {err[bad]:.3g} exceeds tolerance {tol:g} "
                             f"(y0={y0}, S={S})")
    return lam, err


@dataclass
class CuspTriple:
    """lam_f, lam_g, lam_h with error bounds and provenance.

    ``lam_h`` covers 1..N exactly: the Fricke image of the desk eta quotient is
    the form itself with constant 1. ``h_extracted`` keeps the FFT values as an
    independent check. ``lam_g`` is numeric on 1..n_max.
    """

    ell: int
    lam_f: np.ndarray
    lam_h: np.ndarray
    err_h: np.ndarray
    lam_g: np.ndarray
    err_g: np.ndarray
    N_cusp: int
    kinds: dict = field(default_factory=dict)
    h_extracted: np.ndarray | None = None
    h_extracted_err: np.ndarray | None = None
    contour: ContourSpec | None = None

    @property
    def N(self) -> int:
        return len(self.lam_f) - 1

    def coeffs_for(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """(lam(n; d), err) per residue class of d: f if 4|d, g if 2||d, h if d odd."""
        if d % 4 == 0:
            return self.lam_f, np.zeros_like(self.lam_f)
        if d % 2 == 0:
            return self.lam_g, self.err_g
        return self.lam_h, self.err_h


def fricke_is_identity(quotient=DESK_QUOTIENT) -> bool:
    image, _, c4 = quotient.fricke()
    return image.exponents == quotient.exponents and c4 == 1


def build_cusp_triple(form: HalfIntegralForm, contour: ContourSpec | None = None,
                      n_max: int = 50, check: bool = True) -> CuspTriple:
    """Assemble the triple; lam_g and the h cross-check come from FFT extraction."""
    contour = contour or ContourSpec()
    g, g_err = extract_coeffs("g", n_max, contour, form)
    h, h_err = extract_coeffs("h", n_max, contour, form)
    kinds = {"f": "exact", "g": "numeric"}
    if form.source_tag.startswith("eta(2z)^12") and fricke_is_identity():
        lam_h = np.array(form.lam, dtype=float)
        err_h = np.zeros_like(lam_h)
        kinds["h"] = "exact(fricke)"
        if check:
            dev = np.abs(h[1:] - lam_h[1 : n_max + 1])
            if np.any(dev > h_err[1:]):
                k = int(np.argmax(dev - h_err[1:])) + 1
                raise ToleranceError(f"extracted lam_h({k}) disagrees with the Fricke image")
    else:
        lam_h = np.zeros(n_max + 1)
        lam_h[1:] = h.real[1:]
        err_h = h_err.copy()
        kinds["h"] = "numeric"
    return CuspTriple(
        ell=form.ell, lam_f=np.array(form.lam, dtype=float), lam_h=lam_h, err_h=err_h,
        lam_g=g.real.copy(), err_g=g_err, N_cusp=n_max, kinds=kinds,
        h_extracted=h, h_extracted_err=h_err, contour=contour)


def triple_from_sequences(lam_f, lam_h=None, lam_g=None, ell: int = 4, err=0.0) -> CuspTriple:
    """Triple built from given sequences (synthetic data, tests); missing parts copy lam_f."""
    lam_f = np.asarray(lam_f, dtype=float)
    lam_h = lam_f if lam_h is None else np.asarray(lam_h, dtype=float)
    lam_g = lam_f if lam_g is None else np.asarray(lam_g, dtype=float)
    return CuspTriple(ell, lam_f, lam_h, np.full(len(lam_h), float(err)), lam_g,
                      np.full(len(lam_g), float(err)), len(lam_h) - 1,
                      {"f": "synthetic", "g": "synthetic", "h": "synthetic"})
