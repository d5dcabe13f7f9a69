"""Truncated Voronoi main terms for partial sums of lam_f over residue classes.

    S_f(x, a/d) = sum_{n <= x} lam_f(n) R_d(n - a)
              ~ x^{1/4} / (pi sqrt 2) sum_{n <= M} lam(n; d) phi_a(n, d) n^{-3/4}
                  cos(4 pi sqrt(n x) / q_d - (l+1) pi / 2)

and the progression sum sum_{n <= x, n = a (Q)} lam_f(n) = Q^{-1} sum_{d | Q} S_f(x, a/d).

By default the weight phi is built from K_dual (the varpi weight taken at
-v); ``dual="table"`` keeps phi_a(n, d) as defined, for comparison.

The cosine sum carries no constant term. The partial sums do: the residue of
L(s, a/d) x^s / s at s = 0 is L(0, a/d) = sum lam(n) R_d(n - a) n^{-s} at s = 0,
an x-independent offset. ``zero_value`` computes it from a Mellin integral
and ``constant=True`` adds it to the main term.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .arith import divisors, ramanujan_table
from .cusp import CuspTriple
from .expsums import ExpSumContext, phi_a, phi_dual

REALNESS_REL = 1e-9
REALNESS_ABS = 1e-12
TWO_ROUTE_REL = 1e-9
DUALS = ("reflected", "table")


class RealnessError(RuntimeError):
    pass


class TwoRouteError(RuntimeError):
    pass


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class VoronoiParams:
    x: float
    M: int
    d: int = 1
    a: int = 0
    ell: int = 4
    rho: float = 1 / 6
    dual: str = "reflected"
    constant: bool = False

    def __post_init__(self):
        if self.x <= 0 or self.d < 1 or self.M < 1:
            raise ValueError("need x > 0, d >= 1, M >= 1")
        if self.dual not in DUALS:
            raise ValueError(f"dual must be one of {DUALS}")
        if not 0 < self.rho <= 0.5:
            raise ValueError("rho must lie in (0, 1/2]")

    @property
    def in_theorem_range(self) -> bool:
        return 2 <= self.M <= self.x and self.d <= math.sqrt(self.x)


@dataclass(frozen=True)
class TruncationReport:
    x: float
    M: int
    d: int
    a: int
    main_term: float
    direct_value: float
    residual: float

    def row(self) -> dict:
        return asdict(self)


def _check_range(x: float, lam: np.ndarray) -> int:
    n = int(math.floor(x))
    if n > len(lam) - 1:
        raise RangeError(f"x={x} beyond the coefficient range N={len(lam) - 1}")
    return max(n, 0)


def direct_partial_sum(x: float, a: int, d: int, lam: np.ndarray) -> float:
    """sum_{n <= x} lam(n) R_d(n - a), exact coefficients, correctly rounded sum."""
    n_top = _check_range(x, lam)
    if n_top < 1:
        return 0.0
    n = np.arange(1, n_top + 1)
    r = ramanujan_table(d)[(n - a) % d]
    return math.fsum(lam[1 : n_top + 1] * r)


def progression_sum(x: float, a: int, Q: int, lam: np.ndarray) -> float:
    """sum_{n <= x, n = a (mod Q)} lam(n), straight from the definition."""
    n_top = _check_range(x, lam)
    a %= Q
    start = a if a else Q
    return math.fsum(lam[start : n_top + 1 : Q])


def direct_progression_sum(x: float, a: int, Q: int, lam: np.ndarray) -> float:
    """Progression sum by definition, checked against the divisor-sum route.

    Raises TwoRouteError if the routes differ by more than 1e-9 times
    sum_{n <= x} |lam(n)|.
    """
    a %= Q
    route1 = progression_sum(x, a, Q, lam)
    route2 = math.fsum(direct_partial_sum(x, a, d, lam) for d in divisors(Q)) / Q
    scale = max(1.0, math.fsum(np.abs(lam[1 : _check_range(x, lam) + 1])))
    if abs(route1 - route2) > TWO_ROUTE_REL * scale:
        raise TwoRouteError(f"x={x}, a={a}, Q={Q}: {route1!r} vs {route2!r}")
    return route1


def phi_period(a: int, d: int, ell: int = 4, dual: str = "reflected") -> np.ndarray:
    """Main-term weight for n over one period (d, or 4d when 2 || d).

    ``dual="table"`` is phi_a(n, d) exactly as defined from the varpi table;
    ``dual="reflected"`` evaluates the varpi weight at -v (see K_dual), which
    is what the partial sums of the desk form follow.
    """
    if dual not in DUALS:
        raise ValueError(f"dual must be one of {DUALS}")
    ctx = ExpSumContext(d, ell)
    period = 4 * d if ctx.parity_class == "twice_odd" else d
    fn = phi_dual if dual == "reflected" else phi_a
    return np.array([fn(a, n, ctx) for n in range(period)])


def dual_coefficients(d: int, triple: CuspTriple, dual: str = "reflected") -> np.ndarray:
    """lam(n; d); for 2 || d the reflected pairing uses g with its 2^{l+1/2} factor."""
    lam, _ = triple.coeffs_for(d)
    if dual == "reflected" and d % 4 == 2:
        return lam * 2 ** (triple.ell + 0.5)
    return lam


def _summand_weights(a: int, d: int, M: int, triple: CuspTriple, ell: int,
                     dual: str = "reflected") -> tuple[np.ndarray, int]:
    lam = dual_coefficients(d, triple, dual)
    if M > len(lam) - 1:
        raise RangeError(f"lam(n; {d}) known only to n={len(lam) - 1}, M={M} requested")
    n = np.arange(1, M + 1)
    table = phi_period(a, d, ell, dual)
    phi = table[n % len(table)]
    prod = lam[1 : M + 1] * phi
    bad = np.abs(prod.imag) >= REALNESS_REL * np.abs(prod) + REALNESS_ABS
    if d % 2 and np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise RealnessError(f"summand n={k}, d={d}: {prod[k - 1]!r} is not real")
    q_d = d if d % 4 == 0 else 2 * d
    return prod.real * n ** -0.75, q_d


@lru_cache(maxsize=256)
def _zero_value_cached(a: int, d: int, ell: int, lam_bytes: bytes, nodes: int) -> float:
    lam = np.frombuffer(lam_bytes, dtype=float)
    s = ell / 2 - 0.25
    y_lo, y_hi = 0.02 / (d * d), 20.0
    n_top = int(40 / (2 * math.pi * y_lo)) + 1
    if n_top > len(lam) - 1:
        raise RangeError(f"zero value for d={d} needs lam up to n={n_top}, have {len(lam) - 1}")
    n = np.arange(1, n_top + 1, dtype=float)
    coef = lam[1 : n_top + 1] * n ** s * ramanujan_table(d)[(np.arange(1, n_top + 1) - a) % d]
    # F(y) = sum a(n) R_d(n - a) e^{-2 pi n y} decays at both ends; trapezoid in log y
    t = np.linspace(math.log(y_lo), math.log(y_hi), nodes)
    y = np.exp(t)
    vals = np.array([coef @ np.exp(-2 * np.pi * n * yy) for yy in y]) * y ** s
    integral = float(np.sum(vals[1:] + vals[:-1]) * (t[1] - t[0]) / 2)
    return (2 * math.pi) ** s / math.gamma(s) * integral


def zero_value(a: int, d: int, lam: np.ndarray, ell: int = 4, nodes: int = 800) -> float:
    """L(0, a/d): the value at s = 0 of sum_n lam(n) R_d(n - a) n^{-s}.

    Uses (2 pi)^{-s'} Gamma(s') L_a(s') = int_0^inf F(y) y^{s'-1} dy with
    s' = l/2 - 1/4 and F built from the unnormalized coefficients. F is a
    cusp form combination, so the integral is cut to [0.02/d^2, 20].
    """
    lam = np.ascontiguousarray(lam, dtype=float)
    return _zero_value_cached(a % d, d, ell, lam.tobytes(), nodes)


def main_term_many(xs, a: int, d: int, M: int, triple: CuspTriple, ell: int = 4,
                   dual: str = "reflected", constant: bool = False) -> np.ndarray:
    """Main term at many x for one (a, d, M); ``constant`` adds L(0, a/d)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    w, q_d = _summand_weights(a, d, M, triple, ell, dual)
    n = np.arange(1, M + 1, dtype=float)
    arg = (4 * np.pi / q_d) * np.sqrt(np.outer(xs, n)) - (ell + 1) * np.pi / 2
    out = xs ** 0.25 / (np.pi * math.sqrt(2)) * (np.cos(arg) @ w)
    if constant:
        out = out + zero_value(a, d, triple.lam_f, ell)
    return out


def voronoi_main_term(params: VoronoiParams, triple: CuspTriple) -> float:
    return float(main_term_many([params.x], params.a, params.d, params.M, triple, params.ell,
                                params.dual, params.constant)[0])


def voronoi_progression(params: VoronoiParams, triple: CuspTriple, Q: int | None = None) -> float:
    """Main term for the progression n = a (mod Q), Q odd: Q^{-1} sum over d | Q."""
    Q = params.d if Q is None else Q
    if Q % 2 == 0:
        raise ValueError("progression main term is implemented for odd Q")
    total = math.fsum(
        float(main_term_many([params.x], params.a % Q, d, params.M, triple, params.ell,
                             params.dual, params.constant)[0])
        for d in divisors(Q))
    return total / Q


def compare(params: VoronoiParams, triple: CuspTriple) -> TruncationReport:
    main = voronoi_main_term(params, triple)
    direct = direct_partial_sum(params.x, params.a, params.d, triple.lam_f)
    return TruncationReport(params.x, params.M, params.d, params.a, main, direct, abs(direct - main))


def compare_progression(params: VoronoiParams, triple: CuspTriple) -> TruncationReport:
    Q = params.d
    main = voronoi_progression(params, triple)
    direct = direct_progression_sum(params.x, params.a, Q, triple.lam_f)
    return TruncationReport(params.x, params.M, Q, params.a % Q, main, direct, abs(direct - main))


def residual_scan(x_grid, M_grid, d: int, a: int, triple: CuspTriple, ell: int = 4,
                  dual: str = "reflected", constant: bool = False) -> list[dict]:
    """Rows (x, M, d, a, main, direct, residual) ordered by (x, M)."""
    xs = np.asarray(sorted(x_grid), dtype=float)
    n_top = _check_range(xs[-1], triple.lam_f)
    n = np.arange(1, n_top + 1)
    partial = np.cumsum(triple.lam_f[1 : n_top + 1] * ramanujan_table(d)[(n - a) % d])
    direct = np.array([partial[int(math.floor(x)) - 1] if x >= 1 else 0.0 for x in xs])
    mains = {M: main_term_many(xs, a, d, M, triple, ell, dual, constant) for M in sorted(M_grid)}
    rows = []
    for i, x in enumerate(xs):
        for M in sorted(M_grid):
            m = float(mains[M][i])
            rows.append({"x": float(x), "M": int(M), "d": d, "a": a, "main": m,
                         "direct": float(direct[i]), "residual": abs(float(direct[i]) - m)})
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def grid_residual_slope(rows: list[dict], stat: str = "median") -> float:
    """Slope in log M of the median (or rms) residual over all x in the rows."""
    Ms = sorted({r["M"] for r in rows})
    agg = []
    for M in Ms:
        res = np.array([r["residual"] for r in rows if r["M"] == M])
        agg.append(np.median(res) if stat == "median" else math.sqrt(float(np.mean(res ** 2))))
    return loglog_slope(Ms, agg)


def residual_slopes(rows: list[dict]) -> dict[float, float]:
    """Per-x slope of log residual in log M."""
    out = {}
    for x in sorted({r["x"] for r in rows}):
        sel = sorted((r["M"], r["residual"]) for r in rows if r["x"] == x)
        out[x] = loglog_slope([m for m, _ in sel], [res for _, res in sel])
    return out


def mean_value_metric(lam: np.ndarray, X: float, exponent: float = (1 + 1 / 6) / 3 + 0.05) -> dict:
    """max_{1 <= x <= X} |S(x)| / x^exponent for S(x) = sum_{n <= x} lam(n)."""
    n_top = _check_range(X, lam)
    partial = np.cumsum(lam[1 : n_top + 1])
    x = np.arange(1, n_top + 1, dtype=float)
    ratio = np.abs(partial) / x ** exponent
    i = int(np.argmax(ratio))
    return {"X": X, "exponent": exponent, "constant": float(ratio[i]), "argmax": i + 1}
