"""Exact modular arithmetic used by every exponential sum in the package.

Everything here works on Python integers (arbitrary precision). Nothing is
cached across calls except small per-modulus tables, which are immutable.
"""

from __future__ import annotations

import math
import random
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "ResidueClass",
    "jacobi",
    "eps",
    "mod_inverse",
    "tonelli_shanks",
    "mod_sqrt_all",
    "ramanujan_sum",
    "ramanujan_table",
    "factorize",
    "squarefree_split",
    "tau",
    "mobius",
    "euler_phi",
    "divisors",
    "gcd",
    "crt_combine",
    "is_prime",
]

gcd = math.gcd


class ResidueClass(NamedTuple):
    value: int
    modulus: int

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n >= 1; (a/1) = 1."""
    if n <= 0 or n % 2 == 0:
        raise ValueError(f"jacobi needs an odd positive modulus, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


_I_POWERS = (1, 1j, -1, -1j)


def eps(d: int) -> complex:
    """The theta-multiplier unit: 1 if d = 1 (mod 4), i if d = 3 (mod 4)."""
    if d % 2 == 0:
        raise ValueError(f"eps is only defined for odd d, got {d}")
    return 1 if d % 4 == 1 else 1j


def eps_power(d: int, k: int) -> complex:
    """eps(d) ** k computed exactly in the unit group {1, i, -1, -i}."""
    if d % 2 == 0:
        raise ValueError(f"eps is only defined for odd d, got {d}")
    return 1 if d % 4 == 1 else _I_POWERS[k % 4]


def mod_inverse(u: int, d: int) -> ResidueClass:
    if d < 1:
        raise ValueError("modulus must be positive")
    try:
        return ResidueClass(pow(u, -1, d), d)
    except ValueError:
        raise ValueError(f"{u} is not invertible modulo {d}") from None


def tonelli_shanks(b: int, p: int) -> int | None:
    """One square root of b modulo the odd prime p, or None if b is a non-residue."""
    b %= p
    if b == 0:
        return 0
    if pow(b, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(b, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(b, q, p), pow(b, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        bb = pow(c, 1 << (m - i - 1), p)
        m, c = i, bb * bb % p
        t, r = t * c % p, r * bb % p
    return r


def _hensel_unit_root(b: int, p: int, alpha: int) -> int | None:
    # b is a unit mod p; Newton iteration lifts a root mod p to p**alpha.
    y = tonelli_shanks(b, p)
    if y is None:
        return None
    mod = p ** alpha
    k = 1
    while k < alpha:
        k = min(2 * k, alpha)
        pk = p ** k
        y = (y - (y * y - b) * pow(2 * y, -1, pk)) % pk
    assert (y * y - b) % mod == 0
    return y


def mod_sqrt_all(b: int, p: int, alpha: int) -> set[int]:
    """All y in [0, p**alpha) with y*y = b (mod p**alpha), p an odd prime."""
    if p == 2 or p < 2:
        raise ValueError("mod_sqrt_all needs an odd prime")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    mod = p ** alpha
    b %= mod
    if b == 0:
        step = p ** ((alpha + 1) // 2)
        return set(range(0, mod, step))
    v = 0
    while b % p == 0:
        b //= p
        v += 1
    if v % 2:
        return set()
    half = v // 2
    # y = p**half * w with w*w = b' (mod p**(alpha - v)); w is free mod p**(alpha - half)
    inner = alpha - v
    w0 = _hensel_unit_root(b, p, inner)
    if w0 is None:
        return set()
    inner_mod = p ** inner
    roots = set()
    for w in {w0, (-w0) % inner_mod}:
        for k in range(p ** half):
            roots.add((p ** half) * (w + k * inner_mod) % mod)
    return roots


@lru_cache(maxsize=4096)
def divisors(n: int) -> tuple[int, ...]:
    divs = [1]
    for p, a in factorize(n):
        divs = [d * p ** e for d in divs for e in range(a + 1)]
    return tuple(sorted(divs))


def mobius(n: int) -> int:
    fac = factorize(n)
    if any(a > 1 for _, a in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def ramanujan_sum(d: int, m: int) -> int:
    """R_d(m) = sum over units u mod d of e(mu/d), by the Mobius/divisor formula."""
    if d < 1:
        raise ValueError("ramanujan_sum needs d >= 1")
    g = math.gcd(d, m)
    return sum(mobius(d // delta) * delta for delta in divisors(g))


@lru_cache(maxsize=1024)
def ramanujan_table(d: int) -> np.ndarray:
    """R_d(r) for r = 0..d-1 as a read-only int64 array."""
    out = np.array([ramanujan_sum(d, r) for r in range(d)], dtype=np.int64)
    out.setflags(write=False)
    return out


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    rng = random.Random(n)
    while True:
        c = rng.randrange(1, n)
        f = lambda x: (x * x + c) % n  # noqa: E731
        x = y = rng.randrange(2, n)
        d = 1
        while d == 1:
            x = f(x)
            y = f(f(y))
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d


_TRIAL_LIMIT = 10 ** 6


@lru_cache(maxsize=65536)
def _factor_cached(n: int) -> tuple[tuple[int, int], ...]:
    counts: dict[int, int] = {}
    m = n
    p = 2
    while p * p <= m and p < _TRIAL_LIMIT:
        while m % p == 0:
            counts[p] = counts.get(p, 0) + 1
            m //= p
        p += 1 if p == 2 else 2
    stack = [m] if m > 1 else []
    while stack:
        k = stack.pop()
        if is_prime(k):
            counts[k] = counts.get(k, 0) + 1
            continue
        d = _pollard_rho(k)
        stack.extend((d, k // d))
    return tuple(sorted(counts.items()))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as ascending (p, exponent) pairs; factorize(1) == []."""
    if n == 0:
        raise ValueError("cannot factorize 0")
    return list(_factor_cached(abs(n)))


def squarefree_split(n: int) -> tuple[int, int]:
    """Return (t, r) with n = t * r**2 and t squarefree."""
    t = r = 1
    for p, a in factorize(n):
        r *= p ** (a // 2)
        if a % 2:
            t *= p
    return t, r


def tau(n: int) -> int:
    return math.prod(a + 1 for _, a in factorize(n))


def crt_combine(classes: Iterable[ResidueClass | tuple[int, int]]) -> ResidueClass:
    """Combine residues with pairwise coprime moduli into one class."""
    value, modulus = 0, 1
    for v, m in classes:
        if math.gcd(modulus, m) != 1:
            raise ValueError(f"moduli {modulus} and {m} are not coprime")
        t = (v - value) * pow(modulus, -1, m) % m
        value += modulus * t
        modulus *= m
    return ResidueClass(value % modulus, modulus)
