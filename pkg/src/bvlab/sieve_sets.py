"""Progression sets {n <= y : n ≡ a (mod k)}, their divided sets, and the sifting function S(M, z)."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .apstats import count_primes_in_ap
from .arith import ModulusProfile, profile
from .primes import OutOfRangeError, PrimeStore, primes_in_range


@dataclass(frozen=True)
class SieveSetSpec:
    """The set {n / r : 1 <= n <= y, n ≡ residue (mod modulus), r | n}."""

    y: float
    modulus: int
    residue: int
    divisor: int = 1

    def __contains__(self, m: int) -> bool:
        n = m * self.divisor
        return m >= 1 and n <= self.y and (n - self.residue) % self.modulus == 0

    def divided(self, p: int) -> "SieveSetSpec":
        return replace(self, divisor=self.divisor * p)

    @property
    def cap(self) -> int:
        """Largest possible member, floor(y / r)."""
        return math.floor(self.y / self.divisor)

    def members(self) -> np.ndarray:
        """Members in increasing order (solves m*r ≡ residue mod modulus)."""
        k, r = self.modulus, self.divisor
        top = self.cap
        if top < 1:
            return np.zeros(0, dtype=np.int64)
        if k == 1:
            return np.arange(1, top + 1, dtype=np.int64)
        g = math.gcd(r, k)
        if self.residue % g:
            return np.zeros(0, dtype=np.int64)
        k2 = k // g
        if k2 == 1:
            return np.arange(1, top + 1, dtype=np.int64)
        start = (self.residue // g) * pow(r // g, -1, k2) % k2
        if start == 0:
            start = k2
        return np.arange(start, top + 1, k2, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.members().size)


def sieve_set_A(y: float, s: int, e: int) -> SieveSetSpec:
    return SieveSetSpec(y, s, e % s)


def sieve_set_B(y: float, q: int, d: int) -> SieveSetSpec:
    return SieveSetSpec(y, q, d % q)


def spf_table(store: PrimeStore, n_max: int) -> np.ndarray:
    """Smallest prime factor of 0..n_max or beyond (spf[1] is a sentinel above every prime).

    One table per store is kept and regrown when a larger bound is requested.
    """
    if n_max > store.limit:
        raise OutOfRangeError(f"{n_max} exceeds store limit {store.limit}")
    spf = store.memo.get("spf")
    if spf is not None and spf.size > n_max:
        return spf
    n_max = max(int(n_max), 1)
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in store.primes_upto(math.isqrt(n_max)):
        p = int(p)
        idx = np.arange(p * p, n_max + 1, p)
        free = spf[idx] == 0
        spf[idx[free]] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[1] = np.iinfo(np.int64).max
    spf[0] = 0
    store.memo["spf"] = spf
    return spf


def sifted_count(spec: SieveSetSpec, z: float, store: PrimeStore) -> int:
    """S(M, z) = #{n in M : every prime factor p of n has p >= z}; n = 1 always counts."""
    if z < 1:
        raise ValueError(f"z must be >= 1, got {z}")
    mem = spec.members()
    if mem.size == 0:
        return 0
    if spec.cap > store.limit:
        raise OutOfRangeError(f"set cap {spec.cap} exceeds store limit {store.limit}")
    spf = spf_table(store, spec.cap)
    if z <= 2:
        return int(mem.size)
    return int(np.count_nonzero(spf[mem] >= z))


@dataclass(frozen=True)
class BuchstabResult:
    lhs: int
    first_form: int
    second_form: int
    residual: int
    second_residual: int
    n_primes: int


def buchstab_residual(spec: SieveSetSpec, z_low: float, z_high: float, store: PrimeStore) -> BuchstabResult:
    """S(M, z_high) against S(M, z_low) - sum_{z_low <= p < z_high} S(M_p, p).

    The first residual is 0 for every input.  The second form replaces S(M_p, p) by
    S(M_p, z_low); its residual counts elements of M_p with a prime factor in [z_low, p).
    """
    if z_low > z_high:
        raise ValueError(f"z_low={z_low} exceeds z_high={z_high}")
    if z_low < 1:
        raise ValueError(f"z_low must be >= 1, got {z_low}")
    lhs = sifted_count(spec, z_high, store)
    base = sifted_count(spec, z_low, store)
    first = second = 0
    ps = primes_in_range(store, z_low, z_high)
    for p in ps:
        sub = spec.divided(int(p))
        first += sifted_count(sub, int(p), store)
        second += sifted_count(sub, z_low, store)
    return BuchstabResult(lhs, base - first, base - second, lhs - (base - first),
                          lhs - (base - second), int(ps.size))


@dataclass(frozen=True)
class SpiDiscrepancy:
    lhs: int
    rhs: int
    diff: int
    budget: float

    @property
    def ok(self) -> bool:
        return abs(self.diff) <= self.budget


def spi_discrepancy(store: PrimeStore, y: float, prof: ModulusProfile | int, e: int, xref: float,
                    use_radical: bool = False) -> SpiDiscrepancy:
    """pi(y; k, e) against S({n <= y : n ≡ e (mod k)}, xref^(1/2)), k = s (or rad(s)).

    The two counts differ by the primes below xref^(1/2) in the class, the element
    n = 1, and at most one product of two primes equal to xref; hence the budget
    xref^(1/2)/k + 2.
    """
    if not isinstance(prof, ModulusProfile):
        prof = profile(int(prof))
    k = prof.radical if use_radical else prof.s
    if math.gcd(e, prof.s) != 1:
        raise ValueError(f"residue {e} is not coprime to {prof.s}")
    if y > xref or xref > store.limit:
        raise OutOfRangeError(f"need y <= xref <= limit, got y={y}, xref={xref}")
    lhs = count_primes_in_ap(store, y, k, e)
    rhs = sifted_count(SieveSetSpec(y, k, e % k), math.sqrt(xref), store)
    return SpiDiscrepancy(lhs, rhs, lhs - rhs, math.sqrt(xref) / k + 2)
