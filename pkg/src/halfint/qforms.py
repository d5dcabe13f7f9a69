"""Exact q-expansions: series algebra, eta quotients, theta, Hecke T(p^2).

Coefficient arrays are numpy int64 when an a-priori bound shows that no
intermediate value can overflow, and numpy object arrays (Python ints)
otherwise, so results are always exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import jacobi

_INT64_SAFE = 2 ** 62


@dataclass(frozen=True)
class QSeries:
    """Truncated power series sum_{n <= N} c[n] q^n with exact integer coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d array")
        if c.dtype != object and c.dtype != np.int64:
            c = c.astype(np.int64)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries) or other.N != self.N:
            return NotImplemented
        return all(int(x) == int(y) for x, y in zip(self.coeffs, other.coeffs))

    def __add__(self, other: "QSeries") -> "QSeries":
        _same_order(self, other)
        a, b = _common(self, other)
        return QSeries(a + b)

    def __sub__(self, other: "QSeries") -> "QSeries":
        _same_order(self, other)
        a, b = _common(self, other)
        return QSeries(a - b)

    def __mul__(self, other: "QSeries") -> "QSeries":
        return series_mul(self, other)

    def truncate(self, N: int) -> "QSeries":
        if N > self.N:
            raise ValueError(f"cannot extend a series known to order {self.N} to {N}")
        return QSeries(self.coeffs[: N + 1].copy())

    def to_list(self) -> list[int]:
        return [int(x) for x in self.coeffs]

    @classmethod
    def from_list(cls, values, N: int | None = None) -> "QSeries":
        values = [int(v) for v in values]
        if N is not None:
            values = (values + [0] * (N + 1))[: N + 1]
        big = max((abs(v) for v in values), default=0) >= _INT64_SAFE
        return cls(np.array(values, dtype=object if big else np.int64))

    @classmethod
    def one(cls, N: int) -> "QSeries":
        c = np.zeros(N + 1, dtype=np.int64)
        c[0] = 1
        return cls(c)


def _same_order(a: QSeries, b: QSeries) -> None:
    if a.N != b.N:
        raise ValueError(f"truncation orders differ: {a.N} vs {b.N}")


def _abs_sum(c: np.ndarray) -> int:
    return sum(abs(int(x)) for x in c[np.nonzero(c)[0]])


def _abs_max(c: np.ndarray) -> int:
    nz = c[np.nonzero(c)[0]]
    return max((abs(int(x)) for x in nz), default=0)


def _common(A: QSeries, B: QSeries) -> tuple[np.ndarray, np.ndarray]:
    a, b = A.coeffs, B.coeffs
    if a.dtype == object or b.dtype == object or _abs_max(a) + _abs_max(b) >= _INT64_SAFE:
        return a.astype(object), b.astype(object)
    return a, b


def series_mul(A: QSeries, B: QSeries) -> QSeries:
    """Exact product to order min(N_A, N_B); loops over the sparser factor."""
    N = min(A.N, B.N)
    a, b = A.coeffs[: N + 1], B.coeffs[: N + 1]
    if np.count_nonzero(a) < np.count_nonzero(b):
        a, b = b, a
    # any output coefficient is at most max|a| * sum|b|
    exact = a.dtype == object or b.dtype == object or _abs_max(a) * _abs_sum(b) >= _INT64_SAFE
    dtype = object if exact else np.int64
    a = a.astype(dtype)
    out = np.zeros(N + 1, dtype=dtype)
    if dtype == object:
        out[:] = 0
    for k in np.nonzero(b)[0]:
        out[k:] += b[k] * a[: N + 1 - k]
    return QSeries(out)


def series_pow(A: QSeries, k: int) -> QSeries:
    """A**k for k >= 0 by binary powering (k < 0 goes through series_div)."""
    if k < 0:
        return series_div(QSeries.one(A.N), series_pow(A, -k))
    result, base = QSeries.one(A.N), A
    while k:
        if k & 1:
            result = series_mul(result, base)
        k >>= 1
        if k:
            base = series_mul(base, base)
    return result


def series_div(A: QSeries, B: QSeries) -> QSeries:
    """Exact quotient A/B; B must have constant term +1 or -1."""
    N = min(A.N, B.N)
    b0 = int(B.coeffs[0])
    if b0 not in (1, -1):
        raise ValueError(f"division needs a unit constant term, got {b0}")
    idx = np.nonzero(B.coeffs[1 : N + 1])[0] + 1
    bv = [int(B.coeffs[i]) for i in idx]
    out = [0] * (N + 1)
    a = [int(x) for x in A.coeffs[: N + 1]]
    for n in range(N + 1):
        s = a[n]
        for i, v in zip(idx, bv):
            if i > n:
                break
            s -= v * out[n - i]
        out[n] = s * b0
    return QSeries.from_list(out)


def pentagonal_series(t: int, N: int) -> QSeries:
    """prod_{n >= 1} (1 - q^{t n}) through Euler's pentagonal number theorem."""
    c = np.zeros(N + 1, dtype=np.int64)
    c[0] = 1
    k = 1
    while t * k * (3 * k - 1) // 2 <= N:
        sign = -1 if k % 2 else 1
        c[t * k * (3 * k - 1) // 2] += sign
        e2 = t * k * (3 * k + 1) // 2
        if e2 <= N:
            c[e2] += sign
        k += 1
    return QSeries(c)


def _eta_product(t: int, e: int, N: int) -> QSeries:
    # prod (1 - q^{tn})^e without the q^{te/24} prefactor
    p = pentagonal_series(t, N)
    out = QSeries.one(N)
    for _ in range(abs(e)):
        out = series_mul(out, p)
    if e < 0:
        out = series_div(QSeries.one(N), out)
    return out


def _shift(A: QSeries, s: int) -> QSeries:
    out = np.zeros(A.N + 1, dtype=A.coeffs.dtype)
    if s < len(out):
        out[s:] = A.coeffs[: A.N + 1 - s]
    return QSeries(out)


def eta_power(t: int, e: int, N: int) -> QSeries:
    """q^{te/24} prod_{n >= 1} (1 - q^{tn})^e to order N; needs 24 | t e."""
    if t < 1:
        raise ValueError("scale must be positive")
    if (t * e) % 24:
        raise ValueError(f"eta({t}z)^{e} is not a power series in q (t*e = {t * e})")
    return _shift(_eta_product(t, e, N), t * e // 24)


def theta_series(N: int) -> QSeries:
    """theta(z) = sum_{n in Z} q^{n^2}."""
    if N < 0:
        raise ValueError("N must be >= 0")
    c = np.zeros(N + 1, dtype=np.int64)
    c[0] = 1
    k = 1
    while k * k <= N:
        c[k * k] = 2
        k += 1
    return QSeries(c)


def theta_alternating(N: int) -> QSeries:
    """theta(z + 1/2) = sum (-1)^n q^{n^2} = eta(z)^2 / eta(2z)."""
    c = theta_series(N).coeffs.copy()
    k = 1
    while k * k <= N:
        c[k * k] *= -1 if k % 2 else 1
        k += 1
    return QSeries(c)


@dataclass(frozen=True)
class EtaQuotient:
    """prod_delta eta(delta z)^{r_delta} on Gamma_0(level)."""

    exponents: dict
    level: int

    def __post_init__(self):
        for delta in self.exponents:
            if self.level % delta:
                raise ValueError(f"{delta} does not divide the level {self.level}")

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(self.exponents.values()), 2)

    @property
    def order_at_infinity(self) -> Fraction:
        return Fraction(sum(d * r for d, r in self.exponents.items()), 24)

    def q_expansion(self, N: int) -> QSeries:
        order = self.order_at_infinity
        if order.denominator != 1 or order < 0:
            raise ValueError(f"order at infinity {order} is not a non-negative integer")
        out = QSeries.one(N)
        for delta, r in sorted(self.exponents.items()):
            out = series_mul(out, _eta_product(delta, r, N))
        return _shift(out, int(order))

    def fricke(self) -> tuple["EtaQuotient", float, Fraction]:
        """Image under z -> -1/(level z) with the weight-k slash normalization.

        (-i sqrt(N) z)^{-k} F(-1/(N z)) = C * F'(z) where F' has exponents
        delta -> N/delta and C = prod (N/delta)^{r/2} * N^{-k/2}. C**4 is returned
        exactly as a rational alongside the float C.
        """
        N = self.level
        image = {N // d: r for d, r in self.exponents.items()}
        c4 = Fraction(1)
        for d, r in self.exponents.items():
            c4 *= Fraction(N // d) ** (2 * r)
        k2 = sum(self.exponents.values())  # 2k
        c4 /= Fraction(N) ** k2
        c = float(c4) ** 0.25
        return EtaQuotient(image, N), c, c4


# eta(z)^6 eta(4z)^6 / eta(2z)^3 = eta(2z)^12 theta(z)^{-3}
DESK_QUOTIENT = EtaQuotient({1: 6, 2: -3, 4: 6}, 4)
DESK_ELL = 4
DESK_TAG = "eta(2z)^12*theta(z)^-3"


@dataclass(frozen=True)
class HalfIntegralForm:
    """Weight ell + 1/2 form with normalized coefficients lam[n] = a[n] / n^{ell/2 - 1/4}.

    ``a`` holds exact integers (or None for numeric forms); index 0 is unused
    for ``lam``.
    """

    ell: int
    N: int
    lam: np.ndarray
    source_tag: str
    a: np.ndarray | None = None
    eigenvalues: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.lam) != self.N + 1:
            raise ValueError("lambda array must have length N + 1")
        if not np.all(np.isfinite(self.lam)):
            raise ValueError("non-finite coefficient")
        self.lam.setflags(write=False)

    @property
    def kind(self) -> str:
        return "exact" if self.a is not None else "numeric"


def normalize(a: np.ndarray, ell: int) -> np.ndarray:
    n = np.arange(len(a), dtype=float)
    lam = np.zeros(len(a))
    lam[1:] = np.array(a[1:], dtype=float) / n[1:] ** (ell / 2 - 0.25)
    return lam


def hecke_Tp2(a, p: int, ell: int) -> np.ndarray:
    """T(p^2) on unnormalized coefficients, for the n with p^2 n in range.

    b(n) = a(p^2 n) + ((-1)^ell n / p) p^{ell-1} a(n) + p^{2 ell - 1} a(n / p^2).
    Returns Python-int (object) entries b(0..N // p^2).
    """
    a = [int(x) for x in a]
    N = len(a) - 1
    p2 = p * p
    out = []
    sign = -1 if ell % 2 else 1
    for n in range(N // p2 + 1):
        b = a[p2 * n] + jacobi(sign * n, p) * p ** (ell - 1) * a[n]
        if n % p2 == 0:
            b += p ** (2 * ell - 1) * a[n // p2]
        out.append(b)
    return np.array(out, dtype=object)


def hecke_eigencheck(a, p: int, ell: int) -> tuple[int | None, int]:
    """Return (omega_p, residual) where residual = max |b(n) - omega_p a(n)|.

    omega_p is read off at the first nonzero coefficient; None if a vanishes.
    """
    b = hecke_Tp2(a, p, ell)
    a_int = [int(x) for x in a[: len(b)]]
    n1 = next((n for n in range(1, len(b)) if a_int[n]), None)
    if n1 is None:
        return None, max((abs(int(x)) for x in b), default=0)
    if b[n1] % a_int[n1]:
        return None, abs(int(b[n1]))
    omega = int(b[n1]) // a_int[n1]
    residual = max(abs(int(b[n]) - omega * a_int[n]) for n in range(len(b)))
    return omega, residual


class EigencheckError(RuntimeError):
    pass


def desk_coefficients(N: int) -> QSeries:
    """q prod (1 - q^{4n})^6 * theta(z + 1/2)^3, which is eta(2z)^12 theta^{-3}.

    Uses theta(z + 1/2) = eta(z)^2 / eta(2z); no division is needed.
    """
    base = _shift(_eta_product(4, 6, N), 1)
    th = theta_alternating(N)
    for _ in range(3):
        base = series_mul(base, th)
    return base


def certify_theta_quotient(f: QSeries) -> bool:
    """f * theta^3 == eta(2z)^12 exactly to the truncation order."""
    lhs = series_mul(series_mul(series_mul(f, theta_series(f.N)), theta_series(f.N)), theta_series(f.N))
    return lhs == eta_power(2, 12, f.N)


def build_desk_form(N: int, primes=(3, 5, 7)) -> HalfIntegralForm:
    """Weight 9/2 cusp form eta(2z)^12 theta(z)^{-3} on Gamma_0(4), normalized so lam(1) = 1.

    Raises EigencheckError unless the theta-quotient certificate and the exact
    T(p^2) eigencheck for each p in ``primes`` succeed.
    """
    if N < 25:
        raise ValueError("N must be at least 25")
    f = desk_coefficients(N)
    if not certify_theta_quotient(f):
        raise EigencheckError("f * theta^3 differs from eta(2z)^12")
    eig = {}
    for p in primes:
        omega, residual = hecke_eigencheck(f.coeffs, p, DESK_ELL)
        if omega is None or residual != 0:
            raise EigencheckError(f"T({p}^2) eigencheck failed: residual {residual}")
        eig[p] = omega
    a = f.coeffs
    if int(a[1]) != 1:
        raise EigencheckError(f"leading coefficient {a[1]} is not 1")
    return HalfIntegralForm(DESK_ELL, N, normalize(a, DESK_ELL), DESK_TAG, a=a.copy(), eigenvalues=eig)


def form_from_lambda(lam, ell: int = DESK_ELL, tag: str = "synthetic") -> HalfIntegralForm:
    """Wrap a real sequence lam[1..N] (lam[0] ignored) as a numeric form."""
    lam = np.array(lam, dtype=float)
    return HalfIntegralForm(ell, len(lam) - 1, lam, tag)


# ---------------------------------------------------------------------------
# arithmetic scans over the coefficient table


def squarefree_decomposition(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays t, r with n = t r^2 and t squarefree for 1 <= n <= N (index 0 unused)."""
    r = np.ones(N + 1, dtype=np.int64)
    k = 2
    while k * k <= N:
        r[k * k :: k * k] = k
        k += 1
    n = np.arange(N + 1, dtype=np.int64)
    t = np.zeros(N + 1, dtype=np.int64)
    t[1:] = n[1:] // (r[1:] * r[1:])
    return t, r


def divisor_counts(N: int) -> np.ndarray:
    tau = np.zeros(N + 1, dtype=np.int64)
    for k in range(1, N + 1):
        tau[k::k] += 1
    return tau


def check_vanishing_propagation(coeffs, M: int | None = None, max_examples: int = 20) -> dict:
    """Check lam(2^j t) = 0 => lam(2^j t m^2) = 0 for odd m >= 3 (t odd squarefree).

    ``coeffs`` may be exact integers or floats; zero means exactly zero.
    """
    c = np.asarray(coeffs)
    N = len(c) - 1
    tt, _ = squarefree_decomposition(N)
    zero = np.array([x == 0 for x in c])
    bases, checked, violations = 0, 0, []
    for n in range(1, N + 1):
        if not zero[n]:
            continue
        odd = n
        while odd % 2 == 0:
            odd //= 2
        if tt[odd] != odd:
            continue
        bases += 1
        m = 3
        while n * m * m <= N and (M is None or m <= M):
            checked += 1
            if not zero[n * m * m]:
                violations.append({"n": n, "m": m, "value": float(c[n * m * m])})
            m += 2
    return {
        "N": N,
        "zero_bases": bases,
        "n_checked": checked,
        "violations": len(violations),
        "violation_examples": violations[:max_examples],
        "passed": not violations,
    }


def squarefree_part_bound(lam, rho: float = 1 / 6) -> dict:
    """max over n = t r^2 <= N of |lam(n)| / (t^rho tau(r)^2)."""
    if not 0 < rho <= 0.5:
        raise ValueError("rho must lie in (0, 1/2]")
    lam = np.asarray(lam, dtype=float)
    N = len(lam) - 1
    t, r = squarefree_decomposition(N)
    tau = divisor_counts(int(r.max()) if N else 1)
    ratio = np.abs(lam[1:]) / (t[1:].astype(float) ** rho * tau[r[1:]].astype(float) ** 2)
    i = int(np.argmax(ratio))
    return {"N": N, "rho": rho, "constant": float(ratio[i]), "argmax": i + 1}
