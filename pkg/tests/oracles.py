"""Slow, independent reference implementations used to freeze fixtures.

Nothing here imports the package: sums are plain loops over residues with
cmath, Jacobi symbols come from Euler's criterion on prime factors, and the
epsilon factor is read off d mod 4.
"""

import cmath
import math


def e(x):
    return cmath.exp(2j * math.pi * x)


def prime_factors(n):
    out, p = [], 2
    while p * p <= n:
        while n % p == 0:
            out.append(p)
            n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def legendre(a, p):
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def jacobi(a, n):
    """Product of Legendre symbols over the prime factors of odd n."""
    r = 1
    for p in prime_factors(n):
        r *= legendre(a, p)
    return r


def kronecker_c_over_d(c, d):
    """(c/d) for odd positive d, extended as in Shimura's convention for d < 0 not needed."""
    return jacobi(c, d)


def eps(d):
    return 1 if d % 4 == 1 else 1j


def salie(m, n, c):
    return sum(jacobi(x, c) * e((m * x + n * pow(x, -1, c)) / c)
               for x in range(1, c) if math.gcd(x, c) == 1) if c > 1 else 1 + 0j


def kloosterman(m, n, c):
    if c == 1:
        return 1 + 0j
    return sum(e((m * x + n * pow(x, -1, c)) / c) for x in range(1, c) if math.gcd(x, c) == 1)


def twisted(m, n, c, k):
    total = 0j
    for d in range(1, c):
        if math.gcd(d, c) == 1:
            total += eps(d) ** (-k) * jacobi(c, d) * e((m * d + n * pow(d, -1, c)) / c)
    return total


def K_odd(a, n, d, ell=4):
    """Definitional K(a, n; d) for odd d > 1 from the varpi table."""
    total = 0j
    inv4 = pow(4, -1, d)
    for u in range(1, d):
        if math.gcd(u, d) == 1:
            v = pow(u, -1, d)
            total += jacobi(v, d) * e(-inv4 * n * v / d) * e(-a * u / d)
    return cmath.exp(0.5j * math.pi * (ell + 0.5)) * eps(d) ** (-(2 * ell + 1)) * total


def ramanujan(d, m):
    return round(sum(e(m * u / d) for u in range(1, d + 1) if math.gcd(u, d) == 1).real)


def root_sum(b, m, d):
    return sum(e(y / d) for y in range(d) if (y * y - b * m * m) % d == 0)


def gauss(p, t):
    c = p ** t
    return sum(e(x * x / c) for x in range(c))


def eta_product_coeffs(t, e_, N):
    """prod (1 - q^{tn})^e_ expanded by repeated polynomial multiplication."""
    c = [1] + [0] * N
    for n in range(1, N // t + 1):
        for _ in range(e_):
            c = [c[k] - (c[k - t * n] if k >= t * n else 0) for k in range(N + 1)]
    return c
