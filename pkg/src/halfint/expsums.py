"""Kloosterman, Salie and twisted Kloosterman sums, plus the composite kernels
K(a, n; d) and phi_a(n, d) that weight the Voronoi main term.

Conventions:

* ``e(x) = exp(2 pi i x)``; phases are reduced modulo the denominator in
  exact integer arithmetic before conversion to float.
* A sum over residues mod 1 is the single term at 0, so S(m, n; 1) = 1.
* Terms whose Jacobi symbol vanishes contribute nothing; all sums run over
  reduced residues only.
* Scalar evaluators accumulate with ``math.fsum`` (correctly rounded, order
  independent). Table/batch evaluators use BLAS products and are checked
  against the scalar ones in the test-suite.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .arith import (
    crt_combine,
    divisors,
    eps_power,
    factorize,
    jacobi,
    mod_sqrt_all,
    tau,
)

ParityClass = Literal["div4", "twice_odd", "odd"]


@dataclass(frozen=True)
class ExpSumContext:
    d: int
    ell: int = 4

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("modulus d must be >= 1")
        if self.ell < 2:
            raise ValueError("weight index ell must be >= 2")

    @property
    def parity_class(self) -> ParityClass:
        if self.d % 4 == 0:
            return "div4"
        return "twice_odd" if self.d % 2 == 0 else "odd"

    @property
    def q_d(self) -> int:
        return self.d if self.d % 4 == 0 else 2 * self.d


def half_integral_phase(ell: int) -> complex:
    """i ** (ell + 1/2) on the principal branch."""
    return cmath.exp(0.5j * math.pi * (ell + 0.5))


def _csum(terms: np.ndarray) -> complex:
    terms = np.asarray(terms, dtype=complex)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def _phase(num, den: int) -> np.ndarray:
    num = np.mod(np.asarray(num, dtype=np.int64), den)
    return np.exp((2j * np.pi / den) * num)


@lru_cache(maxsize=4096)
def _units(c: int) -> tuple[np.ndarray, np.ndarray]:
    if c == 1:
        units = np.zeros(1, dtype=np.int64)
        inv = np.zeros(1, dtype=np.int64)
    else:
        units = np.array([x for x in range(1, c) if math.gcd(x, c) == 1], dtype=np.int64)
        inv = np.array([pow(int(x), -1, c) for x in units], dtype=np.int64)
    units.setflags(write=False)
    inv.setflags(write=False)
    return units, inv


@lru_cache(maxsize=4096)
def _salie_weights(c: int) -> np.ndarray:
    units, _ = _units(c)
    w = np.array([jacobi(int(x), c) for x in units], dtype=float)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=4096)
def _twisted_weights(c: int, k: int) -> np.ndarray:
    # eps_d ** (-k) * (c / d) for every unit d mod c, 4 | c
    units, _ = _units(c)
    w = np.array([eps_power(int(d), -k) * jacobi(c, int(d)) for d in units], dtype=complex)
    w.setflags(write=False)
    return w


def _weighted_kloosterman(weights: np.ndarray, c: int, m: int, n: int) -> complex:
    units, inv = _units(c)
    terms = weights * _phase((m % c) * units + (n % c) * inv, c)
    return _csum(terms)


def salie_direct(m: int, n: int, c: int) -> complex:
    """S(m, n; c) = sum_x (x/c) e((m x + n xbar)/c), c odd."""
    if c < 1 or c % 2 == 0:
        raise ValueError(f"Salie sums need an odd positive modulus, got {c}")
    return _weighted_kloosterman(_salie_weights(c), c, m, n)


def kloosterman_twisted_direct(m: int, n: int, c: int, k: int) -> complex:
    """K_k(m, n; c) = sum_d eps_d^{-k} (c/d) e((m d + n dbar)/c), 4 | c."""
    if c < 4 or c % 4:
        raise ValueError(f"twisted Kloosterman sums need 4 | c, got {c}")
    return _weighted_kloosterman(_twisted_weights(c, k), c, m, n)


def kloosterman_classical(m: int, n: int, c: int) -> complex:
    if c < 1:
        raise ValueError("modulus must be >= 1")
    units, _ = _units(c)
    return _weighted_kloosterman(np.ones(len(units)), c, m, n)


def K_and(a: int, n: int, ctx: ExpSumContext) -> complex:
    """K(a, n; d) through its Kloosterman-Salie expression.

    For 2 || d the sum is taken over reduced residues mod 4d with weight 1/4;
    the e(-a u / d) factor then becomes e(-4 a u / (4d)), so the second
    argument of the twisted sum is 4a.
    """
    d, ell = ctx.d, ctx.ell
    cls = ctx.parity_class
    if cls == "div4":
        return kloosterman_twisted_direct(n, a, d, 2 * ell + 1).conjugate()
    if cls == "twice_odd":
        return 0.25 * kloosterman_twisted_direct(n, 4 * a, 4 * d, 2 * ell + 1).conjugate()
    if d == 1:
        return half_integral_phase(ell)
    inv4 = pow(4, -1, d)
    s = salie_direct(inv4 * n, a, d)
    return half_integral_phase(ell) * eps_power(d, -(2 * ell + 1)) * s.conjugate()


def K_and_definitional(a: int, n: int, ctx: ExpSumContext, reflect: bool = False) -> complex:
    """K(a, n; d) summed straight from the varpi_d(n, ubar) e(-a u/d) table.

    With ``reflect`` the multiplier weight of varpi_d(n, v) (epsilon and
    Jacobi factors, not the exponential) is evaluated at -v instead of v.
    """
    d, ell = ctx.d, ctx.ell
    cls = ctx.parity_class
    if cls == "odd":
        units, inv = _units(d)
        inv4 = pow(4, -1, d) if d > 1 else 0
        # varpi_d(n, v) = i^{l+1/2} eps_d^{-(2l+1)} (v/d) e(-4bar n v / d) at v = ubar
        sgn = -1 if reflect else 1
        chi = np.array([jacobi(sgn * int(v), d) for v in inv], dtype=float)
        terms = chi * _phase(-inv4 * (n % d) * inv - (a % d) * units, d)
        return half_integral_phase(ell) * eps_power(d, -(2 * ell + 1)) * _csum(terms)
    big = d if cls == "div4" else 4 * d
    units, inv = _units(big)
    wv = (big - inv) % big if reflect else inv
    w = np.array([eps_power(int(v), 2 * ell + 1) * jacobi(d, int(v)) for v in wv], dtype=complex)
    if cls == "div4":
        phases = _phase(-(n % d) * inv - (a % d) * units, d)
        return _csum(w * phases)
    phases = _phase(-(n % big) * inv - 4 * (a % d) * units, big)
    return 0.25 * _csum(w * phases)


def K_dual(a: int, n: int, ctx: ExpSumContext) -> complex:
    """Kernel of the Voronoi main term: K(a, n; d) with the varpi weight taken at -v.

    This is the pairing uv = -1 (mod d) between a twist and its dual. For odd
    d it equals (-1/d) K(a, n; d).
    """
    if ctx.parity_class == "odd":
        return jacobi(-1, ctx.d) * K_and(a, n, ctx)
    return K_and_definitional(a, n, ctx, reflect=True)


def phi_a(a: int, n: int, ctx: ExpSumContext) -> complex:
    """phi_a(n, d) = sqrt(q_d) i^{-(l+1/2)} K(a, n; d)."""
    return math.sqrt(ctx.q_d) * K_and(a, n, ctx) / half_integral_phase(ctx.ell)


def phi_dual(a: int, n: int, ctx: ExpSumContext) -> complex:
    """sqrt(q_d) i^{-(l+1/2)} K_dual(a, n; d)."""
    return math.sqrt(ctx.q_d) * K_dual(a, n, ctx) / half_integral_phase(ctx.ell)


def phi_factored(a: int, n: int, Q: int, ell: int = 4) -> complex:
    """phi_a(n, Q) for odd Q as a product of prime-power Salie sums.

    Each local factor enters complex-conjugated: it is the CRT splitting of
    conj(S(4bar n, a; Q)), which is what phi_a contains for odd moduli.
    """
    if Q < 1 or Q % 2 == 0:
        raise ValueError("phi_factored needs an odd modulus")
    prod = 1 + 0j
    for p, alpha in factorize(Q):
        pa = p ** alpha
        rest = Q // pa
        s = salie_direct(n * pow(4 * rest, -1, pa), a * pow(rest, -1, pa), pa)
        prod *= s.conjugate()
    return math.sqrt(2 * Q) * eps_power(Q, -(2 * ell + 1)) * prod


def c_b(b: int, m: int, d: int) -> complex:
    """Sum of e(y/d) over y mod d with y**2 = b m**2 (mod d)."""
    if d < 1:
        raise ValueError("modulus must be >= 1")
    target = b * m * m
    if d % 2 == 0:
        ys = np.array([y for y in range(d) if (y * y - target) % d == 0], dtype=np.int64)
        return _csum(_phase(ys, d)) if len(ys) else 0j
    local = []
    for p, alpha in factorize(d):
        roots = mod_sqrt_all(target, p, alpha)
        if not roots:
            return 0j
        local.append([(r, p ** alpha) for r in sorted(roots)])
    ys = np.array([crt_combine(combo).value for combo in itertools.product(*local)], dtype=np.int64)
    return _csum(_phase(ys, d))


def salie_closed_form(a: int, n: int, d: int, ell: int = 4) -> complex:
    """Closed form of K(a, n; d) for odd d when a or n is coprime to d:

        i^{l+1/2} eps_d^{-(2l+2)} sqrt(d) (x/d) sum_{y^2 = a n (d)} e(y/d)
    """
    if d < 1 or d % 2 == 0:
        raise ValueError("closed form needs an odd modulus")
    if math.gcd(a, d) == 1:
        x = a
    elif math.gcd(n, d) == 1:
        x = n
    else:
        raise ValueError(f"neither {a} nor {n} is coprime to {d}")
    root_sum = c_b(a * n, 1, d)
    return (half_integral_phase(ell) * eps_power(d, -(2 * ell + 2))
            * math.sqrt(d) * jacobi(x, d) * root_sum)


def gauss_sum(p: int, t: int) -> complex:
    """g(1, p^t) = sum_{x mod p^t} e(x^2 / p^t)."""
    if p % 2 == 0:
        raise ValueError("gauss_sum needs an odd prime")
    c = p ** t
    x = np.arange(c, dtype=np.int64)
    return _csum(_phase(x * x % c, c))


def salie_zero_forced(m: int, p: int, alpha: int) -> bool:
    """Whether S(m, 0; p^alpha) vanishes, from the p-adic valuation of m.

    With beta = v_p(m): odd alpha gives a nonzero sum exactly when
    beta = alpha - 1; even alpha (a Ramanujan sum) exactly when beta >= alpha - 1.
    """
    pa = p ** alpha
    m %= pa
    beta = alpha
    if m:
        beta = 0
        while m % p == 0:
            m //= p
            beta += 1
    if alpha % 2:
        return beta != alpha - 1
    return beta < alpha - 1


# ---------------------------------------------------------------------------
# Batch tables (one modulus, every argument pair)


def salie_matrix(c: int) -> np.ndarray:
    """S(m, n; c) for all 0 <= m, n < c as a c x c complex array."""
    units, inv = _units(c)
    w = _salie_weights(c)
    r = np.arange(c, dtype=np.int64)
    left = _phase(np.outer(r, units), c) * w
    right = _phase(np.outer(inv, r), c)
    return left @ right


def K_and_table(d: int, ell: int = 4) -> np.ndarray:
    """K(a, n; d) for all 0 <= a, n < d and odd d, by direct summation."""
    if d % 2 == 0:
        raise ValueError("K_and_table handles odd moduli")
    if d == 1:
        return np.full((1, 1), half_integral_phase(ell))
    units, inv = _units(d)
    chi = _salie_weights(d)
    inv4 = pow(4, -1, d)
    r = np.arange(d, dtype=np.int64)
    left = _phase(-np.outer(r, units), d) * chi          # a rows
    right = _phase(-inv4 * np.outer(inv, r), d)           # n columns
    return half_integral_phase(ell) * eps_power(d, -(2 * ell + 1)) * (left @ right)


def root_sum_table(d: int) -> np.ndarray:
    """sum_{y^2 = r (d)} e(y/d) for r = 0..d-1 (odd d) via modular square roots."""
    return np.array([c_b(r, 1, d) for r in range(d)])


def closed_form_table(d: int, ell: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form K(a, n; d) on the (a, n) grid plus a mask of admissible pairs."""
    roots = root_sum_table(d)
    r = np.arange(d)
    jac = np.array([jacobi(int(x), d) for x in r], dtype=float)
    coprime = np.array([math.gcd(int(x), d) == 1 for x in r])
    a_ok = coprime[:, None] & np.ones((1, d), dtype=bool)
    n_ok = np.ones((d, 1), dtype=bool) & coprime[None, :]
    sym = np.where(a_ok, jac[:, None], jac[None, :])
    mask = a_ok | n_ok
    prod = np.outer(r, r) % d
    pref = half_integral_phase(ell) * eps_power(d, -(2 * ell + 2)) * math.sqrt(d)
    return pref * sym * roots[prod], mask


def twisted_kloosterman_batch(ms: np.ndarray, ns: np.ndarray, c: int, k: int) -> np.ndarray:
    units, inv = _units(c)
    w = _twisted_weights(c, k)
    ph = _phase(np.outer(np.asarray(ms) % c, units) + np.outer(np.asarray(ns) % c, inv), c)
    return ph @ w


def salie_batch(ms: np.ndarray, ns: np.ndarray, c: int) -> np.ndarray:
    units, inv = _units(c)
    w = _salie_weights(c)
    ph = _phase(np.outer(np.asarray(ms) % c, units) + np.outer(np.asarray(ns) % c, inv), c)
    return ph @ w


def weil_bound(m: int, n: int, c: int) -> float:
    """(m, n, c)^{1/2} c^{1/2} tau(c)."""
    g = math.gcd(math.gcd(m, n), c)
    return math.sqrt(g * c) * tau(c)


def K_bound(n: int, d: int) -> float:
    """(d, n)^{1/2} d^{1/2} tau(d)."""
    return math.sqrt(math.gcd(d, n) * d) * tau(d)


def odd_divisor_splits(c: int):
    """Yield (q, r) with c = q r, q odd, gcd(q, r) = 1 and 4 | r."""
    for q in divisors(c):
        if q % 2 and math.gcd(q, c // q) == 1 and (c // q) % 4 == 0:
            yield q, c // q
