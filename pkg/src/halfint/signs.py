"""Sign changes of coefficient sequences, the n0 search, the smoothed
short-interval detector and mean-square statistics.

A sign change of a sequence indexed by a set A is a pair i < j in A with
v(i) v(j) < 0 and v(k) = 0 for every k in A strictly between them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .arith import factorize
from .cusp import CuspTriple
from .expsums import ExpSumContext, phi_a, salie_zero_forced

EPS = np.finfo(float).eps
CERTIFY_FACTOR = 10.0
SQUAREFREE_TARGET = 2 / 9 - 0.1


# ---------------------------------------------------------------------------
# index sets and counting


def squarefree_mask(N: int) -> np.ndarray:
    """Boolean array m with m[n] true iff n is squarefree (index 0 false)."""
    mask = np.ones(N + 1, dtype=bool)
    mask[0] = False
    k = 2
    while k * k <= N:
        mask[k * k :: k * k] = False
        k += 1
    return mask


@dataclass(frozen=True)
class IndexSet:
    """All n, squarefree n, or n = a (mod Q), restricted to 1 <= n <= N."""

    kind: str
    N: int
    a: int = 0
    Q: int = 1

    def __post_init__(self):
        if self.kind not in ("all", "squarefree", "progression"):
            raise ValueError(f"unknown index set kind {self.kind!r}")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if self.kind == "progression" and not (self.Q >= 1 and 0 <= self.a < self.Q):
            raise ValueError("progression needs Q >= 1 and 0 <= a < Q")

    def members(self) -> np.ndarray:
        n = np.arange(1, self.N + 1)
        if self.kind == "all":
            return n
        if self.kind == "squarefree":
            return n[squarefree_mask(self.N)[1:]]
        return n[(n - self.a) % self.Q == 0]


@dataclass
class SignChangeReport:
    intervals: list
    count: int
    x: float
    kind: str = "all"

    def as_dict(self) -> dict:
        return asdict(self)


def count_sign_changes(values, indices=None, x: float | None = None, kind: str = "all") -> SignChangeReport:
    """Left-to-right count of sign changes of ``values`` over ``indices``.

    ``indices`` are the labels of the values (default 1, 2, ...). Only indices
    <= x take part. Each interval joins two consecutive nonzero entries of
    opposite sign, so adjacent intervals may share an endpoint.
    """
    v = np.asarray(values, dtype=float)
    idx = np.arange(1, len(v) + 1) if indices is None else np.asarray(indices)
    if len(idx) != len(v):
        raise ValueError("values and indices differ in length")
    if x is not None:
        keep = idx <= x
        v, idx = v[keep], idx[keep]
    nz = np.nonzero(v)[0]
    s = np.sign(v[nz])
    flips = np.nonzero(s[1:] != s[:-1])[0]
    intervals = [(int(idx[nz[k]]), int(idx[nz[k + 1]])) for k in flips]
    top = float(x) if x is not None else float(idx[-1]) if len(idx) else 0.0
    return SignChangeReport(intervals, len(intervals), top, kind)


def brute_force_sign_changes(values, indices=None) -> list[tuple[int, int]]:
    """Every pair (i, j) meeting the definition, by checking all pairs. O(n^2)."""
    v = [float(t) for t in values]
    idx = list(range(1, len(v) + 1)) if indices is None else [int(t) for t in indices]
    out = []
    for p in range(len(v)):
        for q in range(p + 1, len(v)):
            if v[p] * v[q] < 0 and all(v[k] == 0 for k in range(p + 1, q)):
                out.append((idx[p], idx[q]))
    return out


def validate_intervals(report: SignChangeReport, values, indices=None) -> bool:
    """Independent check that every interval satisfies the definition."""
    v = np.asarray(values, dtype=float)
    idx = np.arange(1, len(v) + 1) if indices is None else np.asarray(indices)
    pos = {int(n): k for k, n in enumerate(idx)}
    for i, j in report.intervals:
        if i not in pos or j not in pos or i >= j:
            return False
        p, q = pos[i], pos[j]
        if not v[p] * v[q] < 0 or np.any(v[p + 1 : q] != 0):
            return False
    return True


def sign_changes_on(lam: np.ndarray, index_set: IndexSet, x: float | None = None) -> SignChangeReport:
    members = index_set.members()
    return count_sign_changes(np.asarray(lam)[members], members, x, index_set.kind)


# ---------------------------------------------------------------------------
# choice of n0


def _odd_part(n: int) -> int:
    while n % 2 == 0:
        n //= 2
    return n


@dataclass(frozen=True)
class KernelParams:
    n0: int
    alpha: float
    tau: int
    Q: int
    a: int
    coefficient: float = 0.0

    def __post_init__(self):
        if self.n0 < 1 or not squarefree_mask(self.n0)[_odd_part(self.n0)]:
            raise ValueError(f"odd part of n0={self.n0} is not squarefree")
        if self.tau not in (1, -1):
            raise ValueError("tau must be +1 or -1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def with_tau(self, tau: int) -> "KernelParams":
        return KernelParams(self.n0, self.alpha, tau, self.Q, self.a, self.coefficient)

    def t_grid(self, m_range) -> np.ndarray:
        """t_m = (m + 1/8) / sqrt(n0)."""
        return (np.asarray(m_range, dtype=float) + 0.125) / math.sqrt(self.n0)


@dataclass(frozen=True)
class NotFound:
    Q: int
    a: int
    scanned: tuple
    candidates: int
    pruned: int
    reason: str = "no certified n0"


def theorem_case(Q: int, a: int) -> str | None:
    """Which of the three sufficient conditions holds for odd Q, if any."""
    if Q == 1:
        return "Q=1"
    fac = factorize(Q)
    if a % Q == 0 and all(e % 2 for _, e in fac):
        return "a=0"
    if math.gcd(a, Q) == 1 and all(e >= 2 for _, e in fac):
        return "coprime-squareful"
    return None


def n0_candidates(n_max: int):
    """n = 2^j f0 <= n_max with f0 odd squarefree, increasing."""
    sf = squarefree_mask(n_max)
    for n in range(1, n_max + 1):
        if sf[_odd_part(n)]:
            yield n


def phi_forced_zero(a: int, n: int, Q: int) -> bool:
    """True when phi_a(n, Q) vanishes for a reason visible from valuations alone.

    a = 0: a local Salie factor S(m, 0; p^alpha) is forced to zero.
    p not dividing a, alpha >= 2, p || n: no y with y^2 = a n (mod p^alpha), so
    the closed form vanishes.
    """
    for p, alpha in factorize(Q) if Q > 1 else []:
        pa = p ** alpha
        if a % Q == 0:
            rest = Q // pa
            m = n * pow(4 * rest, -1, pa) % pa
            if salie_zero_forced(m, p, alpha):
                return True
        elif a % p and alpha >= 2 and n % p == 0 and n % (p * p):
            return True
    return False


def phi_error(Q: int) -> float:
    """Rounding envelope for phi_a(n, Q) evaluated by a length-Q direct sum."""
    return 64 * EPS * math.sqrt(2 * Q) * Q


def find_n0(Q: int, a: int, triple: CuspTriple, alpha: float | None = None,
            n_max: int | None = None, prune: bool = True):
    """Smallest certified n0 = 2^j f0 with lam_h(n0) phi_a(n0, Q) != 0.

    Certified means |lam_h phi| > 10 (err_lam |phi| + err_phi |lam_h|). Values
    below the threshold are unknown, not zero. Returns KernelParams (tau = +1)
    or NotFound.
    """
    if Q < 1 or Q % 2 == 0:
        raise ValueError("find_n0 needs odd Q >= 1")
    a %= Q
    lam, err = triple.lam_h, triple.err_h
    top = len(lam) - 1 if n_max is None else min(n_max, len(lam) - 1)
    ctx = ExpSumContext(Q, triple.ell)
    phi_err = phi_error(Q)
    seen = pruned = 0
    for n in n0_candidates(top):
        seen += 1
        if prune and phi_forced_zero(a, n, Q):
            pruned += 1
            continue
        if lam[n] == 0 and err[n] == 0:
            continue
        phi = abs(phi_a(a, n, ctx)) if Q > 1 else math.sqrt(2)
        value = abs(lam[n]) * phi
        if value > CERTIFY_FACTOR * (err[n] * phi + phi_err * abs(lam[n])):
            return KernelParams(n, alpha if alpha else 4 / math.sqrt(n), 1, Q, a, value)
    return NotFound(Q, a, (1, top), seen, pruned)


# ---------------------------------------------------------------------------
# the smoothed detector


def kernel_k(u, alpha: float, n0: int, tau: int) -> np.ndarray:
    """(1 - |u|)(1 + tau cos(2 pi alpha sqrt(n0) u)) on [-1, 1]."""
    u = np.asarray(u, dtype=float)
    return (1 - np.abs(u)) * (1 + tau * np.cos(2 * np.pi * alpha * math.sqrt(n0) * u))


def progression_table(lam: np.ndarray, a: int, Q: int) -> np.ndarray:
    """P[k] = sum_{n <= k, n = a (Q)} lam(n) for 0 <= k <= N."""
    lam = np.asarray(lam, dtype=float)
    c = np.zeros_like(lam)
    a %= Q
    start = a if a else Q
    c[start::Q] = lam[start::Q]
    c[0] = 0.0
    return np.cumsum(c)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class TruncationExceeded(ValueError):
    pass


def kernel_J_many(ts, params: KernelParams, lam: np.ndarray, table: np.ndarray | None = None) -> np.ndarray:
    """J_tau(t) = int_{-1}^{1} F(t + alpha u) k_tau(u) du for each t.

    F(s) = pi sqrt(Q) S((Q s)^2) / sqrt(s), with S the exact progression partial
    sum. S is a step function of u with jumps where (Q(t + alpha u))^2 crosses a
    member of the progression; those points and u = 0 are breakpoints, and each
    piece is integrated with 8-point Gauss-Legendre.
    """
    lam = np.asarray(lam, dtype=float)
    N = len(lam) - 1
    Q, a, alpha = params.Q, params.a % params.Q, params.alpha
    P = progression_table(lam, a, Q) if table is None else table
    out = []
    for t in np.atleast_1d(np.asarray(ts, dtype=float)):
        if t - alpha <= 0:
            raise TruncationExceeded(f"t={t} must exceed alpha={alpha}")
        x_hi = (Q * (t + alpha)) ** 2
        if x_hi > N:
            raise TruncationExceeded(f"(Q(t+alpha))^2 = {x_hi:.6g} exceeds N={N}")
        x_lo = (Q * (t - alpha)) ** 2
        first = math.floor(x_lo) + 1
        first += (a - first) % Q
        jumps = np.arange(first, math.floor(x_hi) + 1, Q, dtype=float)
        u_break = (np.sqrt(jumps) / Q - t) / alpha
        u = np.unique(np.concatenate(([-1.0, 0.0, 1.0], u_break[(u_break > -1) & (u_break < 1)])))
        lo, hi = u[:-1], u[1:]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        s = t + alpha * nodes
        step = P[np.floor((Q * (t + alpha * mid)) ** 2).astype(np.int64)]
        f = np.pi * math.sqrt(Q) * step[:, None] / np.sqrt(s)
        vals = f * kernel_k(nodes, alpha, params.n0, params.tau)
        out.append(float(np.sum(half * (vals @ _GL_WEIGHTS))))
    return np.array(out)


def kernel_J(t: float, params: KernelParams, triple: CuspTriple) -> float:
    return float(kernel_J_many([t], params, triple.lam_f)[0])


def opposite_sign_rate(params: KernelParams, lam: np.ndarray, m_range=None) -> dict:
    """Fraction of t_m in the window with J_+(t_m) J_-(t_m) < 0.

    By default the window is every m with alpha < t_m and (Q(t_m + alpha))^2 <= N.
    """
    lam = np.asarray(lam, dtype=float)
    N = len(lam) - 1
    r0 = math.sqrt(params.n0)
    if m_range is None:
        t_max = math.sqrt(N) / params.Q - params.alpha
        m_lo = max(0, math.floor(params.alpha * r0 - 0.125) + 1)
        m_hi = math.floor(t_max * r0 - 0.125)
        m_range = range(m_lo, m_hi + 1)
    ts = params.t_grid(m_range)
    table = progression_table(lam, params.a, params.Q)
    jp = kernel_J_many(ts, params.with_tau(1), lam, table)
    jm = kernel_J_many(ts, params.with_tau(-1), lam, table)
    opposite = jp * jm < 0
    return {
        "Q": params.Q, "a": params.a, "n0": params.n0, "alpha": params.alpha,
        "t_min": float(ts[0]) if len(ts) else None, "t_max": float(ts[-1]) if len(ts) else None,
        "n_points": int(len(ts)), "n_opposite": int(opposite.sum()),
        "rate": float(opposite.mean()) if len(ts) else 0.0,
    }


# ---------------------------------------------------------------------------
# short windows


def window_scan(x0: int, x1: int, c0: float, a: int, Q: int, lam: np.ndarray,
                max_failures: int = 20) -> dict:
    """Sign changes of lam over n = a (mod Q) in (x, x + c0 sqrt x] for each integer x in [x0, x1].

    c(x) = (j - x)/sqrt(x) where j is the first member after x whose sign
    differs from the first nonzero member after x; the window at x succeeds iff
    c(x) <= c0. c0_star is the largest c(x), the smallest c0 for which every
    window succeeds. Windows that pass N without a sign change are undecided
    and left out.
    """
    lam = np.asarray(lam, dtype=float)
    N = len(lam) - 1
    if not 1 <= x0 <= x1 <= N:
        raise ValueError(f"need 1 <= x0 <= x1 <= N={N}")
    members = IndexSet("progression", N, a % Q, Q).members() if Q > 1 else np.arange(1, N + 1)
    v = lam[members]
    nz = members[v != 0]
    sgn = np.sign(lam[nz])
    # next_flip[k]: position of the first nonzero after nz[k] with the other sign
    next_flip = np.full(len(nz), np.inf)
    nxt = np.inf
    for k in range(len(nz) - 2, -1, -1):
        if sgn[k + 1] != sgn[k]:
            nxt = nz[k + 1]
        next_flip[k] = nxt
    xs = np.arange(x0, x1 + 1)
    k = np.searchsorted(nz, xs, side="right")
    j = np.full(len(xs), np.inf)
    ok = k < len(nz)
    j[ok] = next_flip[k[ok]]
    c = (j - xs) / np.sqrt(xs)
    # no opposite sign up to N: undecided if the window itself passes N
    undecided = (j > N) & (xs + c0 * np.sqrt(xs) > N)
    judged = ~undecided
    fail = np.nonzero(judged & (c > c0))[0]
    c_star = float(np.max(c[judged])) if judged.any() else math.inf
    changes = count_sign_changes(lam[members], members, x=x1)
    count = sum(1 for i, _ in changes.intervals if i > x0)
    return {
        "kind": "progression" if Q > 1 else "all",
        "Q": Q, "a": a % Q, "x0": x0, "x1": x1, "c0": c0,
        "c0_star": c_star,
        "argmax": int(xs[judged][int(np.argmax(c[judged]))]) if judged.any() else None,
        "n_windows": int(judged.sum()), "n_undecided": int(undecided.sum()),
        "n_failed": int(len(fail)),
        "failures": [int(xs[i]) for i in fail[:max_failures]],
        "count": int(count),
        "implied_lower_bound": (x1 - x0) / (c_star * math.sqrt(x1)) if math.isfinite(c_star) and c_star > 0 else 0.0,
    }


# ---------------------------------------------------------------------------
# growth statistics


def loglog_fit(xs, ys) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    keep = ys > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def squarefree_signchange_growth(lam: np.ndarray, x_grid) -> dict:
    """C(x) over squarefree n on the grid and its fitted log-log exponent."""
    lam = np.asarray(lam, dtype=float)
    x_grid = np.asarray(sorted(x_grid), dtype=float)
    rep = sign_changes_on(lam, IndexSet("squarefree", int(x_grid[-1])))
    ends = np.array([j for _, j in rep.intervals])
    counts = np.searchsorted(ends, x_grid, side="right")
    exponent = loglog_fit(x_grid, counts)
    return {
        "x_grid": x_grid.tolist(), "counts": counts.tolist(), "exponent": exponent,
        "target": SQUAREFREE_TARGET,
        "passed": bool(np.isfinite(exponent) and exponent >= SQUAREFREE_TARGET),
    }


def meansq_fit(lam: np.ndarray, x_grid) -> dict:
    """Least-squares D with sum_{n <= x} lam(n)^2 ~ D x on the grid.

    ``slope_resid`` is the log-log slope of the envelope
    max_{y <= x} |sum_{n <= y} lam(n)^2 - D y| over the grid.
    """
    lam = np.asarray(lam, dtype=float)
    x_grid = np.asarray(sorted(x_grid), dtype=float)
    top = int(x_grid[-1])
    if top > len(lam) - 1:
        raise ValueError(f"grid reaches {top} beyond N={len(lam) - 1}")
    m2 = np.cumsum(lam[1 : top + 1] ** 2)
    at = m2[x_grid.astype(int) - 1]
    D = float(np.dot(at, x_grid) / np.dot(x_grid, x_grid))
    y = np.arange(1, top + 1, dtype=float)
    env = np.maximum.accumulate(np.abs(m2 - D * y))
    resid = env[x_grid.astype(int) - 1]
    return {"D_fit": D, "slope_resid": loglog_fit(x_grid, resid), "x_grid": x_grid.tolist()}
