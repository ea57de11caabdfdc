"""Exact integer arithmetic for moduli: factorization, radical, totient, inverses, CRT."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

TRIAL_BOUND = 10**6
_RHO_SEED = 0x5EED

# Deterministic Miller-Rabin for n < 3.3e24 (covers all 64-bit inputs).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


class ArithmeticDomainError(ValueError):
    pass


class NotInvertibleError(ArithmeticDomainError):
    pass


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    flags = np.ones(TRIAL_BOUND + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(TRIAL_BOUND) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return tuple(int(p) for p in np.flatnonzero(flags))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 2**64 and well beyond."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _brent_rho(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m = 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _split(n: int, rng: random.Random, out: dict[int, int]) -> None:
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    d = _brent_rho(n, rng)
    _split(d, rng, out)
    _split(n // d, rng, out)


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def prime_powers(self) -> tuple[int, ...]:
        return tuple(p**e for p, e in self.factors)


@lru_cache(maxsize=4096)
def factorize(n: int) -> Factorization:
    """Complete factorization of 1 <= n < 2**64 (trial division, then Brent's rho)."""
    n = int(n)
    if n <= 0:
        raise ArithmeticDomainError(f"cannot factorize {n}")
    if n >= 1 << 64:
        raise ArithmeticDomainError(f"{n} is beyond the 64-bit range")
    found: dict[int, int] = {}
    m = n
    for p in _small_primes():
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            found[p] = e
    if m > 1:
        if m <= TRIAL_BOUND**2 or is_prime(m):
            found[m] = found.get(m, 0) + 1
        else:
            _split(m, random.Random(_RHO_SEED ^ n), found)
    return Factorization(n, tuple(sorted(found.items())))


def _as_factorization(n_or_f) -> Factorization:
    if isinstance(n_or_f, Factorization):
        return n_or_f
    if isinstance(n_or_f, ModulusProfile):
        return n_or_f.factorization
    return factorize(int(n_or_f))


def radical(n_or_f) -> int:
    f = _as_factorization(n_or_f)
    return math.prod(f.primes)


def totient(n_or_f) -> int:
    f = _as_factorization(n_or_f)
    return math.prod(p ** (e - 1) * (p - 1) for p, e in f.factors)


def mod_inverse(a: int, m: int) -> int:
    if m < 2:
        raise ArithmeticDomainError(f"modulus must be >= 2, got {m}")
    if math.gcd(a, m) != 1:
        raise NotInvertibleError(f"{a} is not invertible modulo {m}")
    return pow(a, -1, m)


def crt_combine(residues) -> tuple[int, int]:
    """Combine [(r_i, m_i), ...] with pairwise coprime m_i into (r, prod m_i)."""
    r, m = 0, 1
    for ri, mi in residues:
        if mi < 1:
            raise ArithmeticDomainError(f"bad modulus {mi}")
        if math.gcd(m, mi) != 1:
            raise ArithmeticDomainError(f"modulus {mi} is not coprime to {m}")
        # r + m*t ≡ ri (mod mi)
        t = (ri - r) * pow(m, -1, mi) % mi if mi > 1 else 0
        r, m = r + m * t, m * mi
    return r % m, m


def divisors(n_or_f) -> list[int]:
    f = _as_factorization(n_or_f)
    divs = [1]
    for p, e in f.factors:
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


@dataclass(frozen=True)
class ModulusProfile:
    """A modulus s with its radical q = rad(s) and totient phi(s)."""

    s: int
    factorization: Factorization
    radical: int
    totient: int

    @property
    def q(self) -> int:
        return self.radical

    @property
    def is_squarefree(self) -> bool:
        return self.s == self.radical


def profile(s: int) -> ModulusProfile:
    f = factorize(s)
    return ModulusProfile(int(s), f, radical(f), totient(f))


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)
