"""Slow, obviously-correct reference implementations used only by the tests.

None of these import from bvlab.
"""
from __future__ import annotations

import cmath
import math
from functools import lru_cache

import mpmath


def trial_division_is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@lru_cache(maxsize=8)
def trial_division_primes(limit: int) -> tuple[int, ...]:
    """Primes <= limit, each tested by division against the primes found so far."""
    out: list[int] = []
    for n in range(2, limit + 1):
        r = math.isqrt(n)
        for p in out:
            if p > r:
                out.append(n)
                break
            if n % p == 0:
                break
        else:
            out.append(n)
    return tuple(out)


def factor_naive(n: int) -> dict[int, int]:
    f: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            f[d] = f.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        f[n] = f.get(n, 0) + 1
    return f


def phi_gcd(n: int) -> int:
    return sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)


def li_mpmath(x: float) -> float:
    return float(mpmath.quad(lambda t: 1 / mpmath.log(t), [2, x]))


def F_dense(primes: tuple[int, ...], x: float, s: int, step: float = 0.01) -> float:
    """max over a, and y on a grid of the given step, of |pi(y;s,a) - Li(y)/phi(s)|."""
    phi = phi_gcd(s)
    best = 0.0
    n = int((x - 2) / step)
    for i in range(n + 1):
        y = 2 + i * step
        li = li_mpmath(y) if y > 2 else 0.0
        counts: dict[int, int] = {}
        for p in primes:
            if p > y:
                break
            counts[p % s] = counts.get(p % s, 0) + 1
        for a in range(s):
            if math.gcd(a, s) == 1:
                best = max(best, abs(counts.get(a, 0) - li / phi))
    return best


def sifted_naive(y: float, modulus: int, residue: int, divisor: int, z: float) -> int:
    out = 0
    for m in range(1, math.floor(y / divisor) + 1):
        if (m * divisor - residue) % modulus:
            continue
        if all(p >= z for p in factor_naive(m)):
            out += 1
    return out


def characters_exhaustive(q: int) -> list[dict[int, complex]]:
    """Every homomorphism (Z/q)* -> C*, found by brute force over generator images.

    Only for tiny cyclic or bicyclic groups: enumerates assignments on a generating
    set and keeps the consistent ones.
    """
    units = [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
    units = [u % q for u in units]
    n = len(units)
    gens = []
    span = {1 % q}
    for u in units:
        if u not in span:
            gens.append(u)
            new = set(span)
            while True:
                grown = {(a * g) % q for a in new for g in gens} | new
                if grown == new:
                    break
                new = grown
            span = new
    out = []

    def assign(i, images):
        if i == len(gens):
            table = {1 % q: 1 + 0j}
            frontier = [1 % q]
            ok = True
            while frontier and ok:
                a = frontier.pop()
                for g, w in zip(gens, images):
                    b = a * g % q
                    v = table[a] * w
                    if b in table:
                        if abs(table[b] - v) > 1e-9:
                            ok = False
                            break
                    else:
                        table[b] = v
                        frontier.append(b)
            if ok and len(table) == n:
                out.append(table)
            return
        for k in range(n):
            assign(i + 1, images + [cmath.exp(2j * math.pi * k / n)])

    assign(0, [])
    return out


def count_class(N: int, c: int, k: int) -> int:
    return sum(1 for n in range(1, N + 1) if (n - c) % k == 0)


def type_one_brute(x, y, s, q, e, d, M, a) -> complex:
    total = 0j
    for m in range(1, math.floor(M) + 1):
        if m >= len(a) or math.gcd(m, q) != 1:
            continue
        N = math.floor(y / m)
        ca = sum(1 for n in range(1, N + 1) if (m * n - e) % s == 0)
        cb = sum(1 for n in range(1, N + 1) if (m * n - d) % q == 0)
        total += a[m] * (ca - q / s * cb)
    return total


def type_two_brute(y, s, q, e, d, lo, hi, a, b) -> complex:
    total = 0j
    for m in range(math.floor(lo) + 1, math.floor(hi) + 1):
        if m >= len(a) or math.gcd(m, q) != 1:
            continue
        N = min(math.floor(y / m), len(b) - 1)
        sa = sum(b[n] for n in range(1, N + 1) if (m * n - e) % s == 0)
        sb = sum(b[n] for n in range(1, N + 1) if (m * n - d) % q == 0)
        total += a[m] * (sa - q / s * sb)
    return total


def F_dense_grid(primes, x: float, s: int, step: float = 0.01) -> float:
    """Grid version of F* for larger x: Li by cumulative trapezoid on a finer grid."""
    import numpy as np

    fine = np.arange(2.0, x + step / 4, step / 4)
    f = 1 / np.log(fine)
    li_fine = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(fine))])
    grid = fine[::4]
    li = li_fine[::4]
    phi = phi_gcd(s)
    ps = np.array([p for p in primes if p <= x])
    best = 0.0
    for a in range(s):
        if math.gcd(a, s) != 1:
            continue
        cls = ps[ps % s == a % s]
        cnt = np.searchsorted(cls, grid, side="right")
        best = max(best, float(np.max(np.abs(cnt - li / phi))))
    return best
