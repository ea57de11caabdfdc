"""Dirichlet characters modulo q.

The unit group (Z/qZ)* is written as a product of cyclic components, one per
odd prime power and one or two for the power of 2 (generators -1 and 5 when
8 | q).  A character is an exponent vector k against those generators; its
value at n is exp(2*pi*i * sum_j k_j * log_j(n) / order_j).  Phases are kept as
exact integers modulo the group exponent and only turned into complex numbers
when tabulated.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .arith import (ArithmeticDomainError, Factorization, ModulusProfile, crt_combine, divisors,
                    factorize, lcm, radical, totient)

DLOG_TABLE_LIMIT = 1 << 20


@dataclass(frozen=True)
class Component:
    """One cyclic factor of (Z/qZ)*: the prime power it lives on and its generator."""

    p: int
    k: int
    modulus: int          # p**k
    generator: int        # generator of this cyclic factor, as a residue mod p**k
    order: int
    generator_global: int  # CRT lift: generator here, 1 on the other prime powers
    sign_part: bool = False  # the <-1> factor of (Z/2^k)*, k >= 3


def primitive_root(p: int) -> int:
    """Least primitive root of an odd prime p."""
    phi = p - 1
    qs = factorize(phi).primes
    for g in range(2, p):
        if all(pow(g, phi // r, p) != 1 for r in qs):
            return g
    raise ArithmeticDomainError(f"no primitive root mod {p}")


def _odd_generator(p: int, k: int) -> int:
    g = primitive_root(p)
    if k >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _bsgs(g: int, h: int, order: int, m: int) -> int:
    n = math.isqrt(order) + 1
    table = {}
    e = 1
    for j in range(n):
        table.setdefault(e, j)
        e = e * g % m
    factor = pow(g, -n, m)
    gamma = h % m
    for i in range(n):
        if gamma in table:
            return (i * n + table[gamma]) % order
        gamma = gamma * factor % m
    raise ArithmeticDomainError(f"{h} is not a power of {g} mod {m}")


class _DiscreteLog:
    """Discrete log to a fixed base in a cyclic subgroup mod m; table below a size threshold."""

    def __init__(self, g: int, order: int, m: int):
        self.g, self.order, self.m = g, order, m
        self.table: np.ndarray | None = None
        if m <= DLOG_TABLE_LIMIT:
            table = np.full(m, -1, dtype=np.int64)
            e = 1
            for j in range(order):
                table[e] = j
                e = e * g % m
            self.table = table

    def __call__(self, h: int) -> int:
        if self.table is not None:
            return int(self.table[h % self.m])
        return _bsgs(self.g, h, self.order, self.m)

    def many(self, h: np.ndarray) -> np.ndarray:
        if self.table is not None:
            return self.table[np.asarray(h) % self.m]
        return np.array([self(int(v)) for v in np.ravel(h)], dtype=np.int64).reshape(np.shape(h))


def _components(f: Factorization) -> list[Component]:
    comps: list[Component] = []
    pps = f.prime_powers()

    def lift(res: int, idx: int) -> int:
        parts = [(res if j == idx else 1, m) for j, m in enumerate(pps)]
        return crt_combine(parts)[0]

    for idx, (p, k) in enumerate(f.factors):
        m = p**k
        if p == 2:
            if k == 1:
                continue
            comps.append(Component(2, k, m, m - 1, 2, lift(m - 1, idx), sign_part=True))
            if k >= 3:
                comps.append(Component(2, k, m, 5, 2 ** (k - 2), lift(5, idx)))
        else:
            g = _odd_generator(p, k)
            comps.append(Component(p, k, m, g, p ** (k - 1) * (p - 1), lift(g, idx)))
    return comps


class CharacterGroup:
    """All phi(q) Dirichlet characters mod q, indexed by exponent vectors."""

    def __init__(self, f: Factorization | int):
        if not isinstance(f, Factorization):
            f = factorize(int(f))
        self.factorization = f
        self.modulus = f.n
        self.components = _components(f)
        self.orders = tuple(c.order for c in self.components)
        self.exponent = lcm(*self.orders)
        self._logs = []
        for c in self.components:
            if c.sign_part:
                self._logs.append(None)
            else:
                self._logs.append(_DiscreteLog(c.generator, c.order, c.modulus))

    def __len__(self) -> int:
        return math.prod(self.orders)

    def __iter__(self):
        for exps in itertools.product(*(range(o) for o in self.orders)):
            yield CharacterHandle(self, exps)

    @property
    def size(self) -> int:
        return len(self)

    def principal(self) -> "CharacterHandle":
        return CharacterHandle(self, (0,) * len(self.orders))

    def character(self, exponents) -> "CharacterHandle":
        exps = tuple(int(e) % o for e, o in zip(exponents, self.orders))
        if len(exps) != len(self.orders):
            raise ValueError("exponent vector has the wrong length")
        return CharacterHandle(self, exps)

    def logs(self, n) -> np.ndarray:
        """Discrete logs of n (array) against each generator; shape (len(n), n_components).

        Entries for n not coprime to the modulus are meaningless; see :meth:`coprime_mask`.
        """
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        out = np.zeros((n.size, len(self.components)), dtype=np.int64)
        for j, c in enumerate(self.components):
            r = n % c.modulus
            if c.sign_part:
                # n ≡ -1 mod 4 carries the -1 factor
                out[:, j] = (r % 4 == 3).astype(np.int64)
            elif c.p == 2:
                # strip the sign so the 5-log is taken of an element ≡ 1 mod 4
                u = np.where(r % 4 == 3, (c.modulus - r) % c.modulus, r)
                out[:, j] = self._logs[j].many(u)
            else:
                out[:, j] = self._logs[j].many(r)
        return out

    def coprime_mask(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        return np.gcd(n, self.modulus) == 1

    def phases(self, exponents, n) -> np.ndarray:
        """Exact integer phases in Z/exponent for chi(n); -1 marks chi(n) = 0."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if not self.components:
            return np.where(self.coprime_mask(n), 0, -1)
        weights = np.array([e * (self.exponent // o) for e, o in zip(exponents, self.orders)],
                           dtype=np.int64)
        ph = (self.logs(n) * weights).sum(axis=1) % self.exponent
        return np.where(self.coprime_mask(n), ph, -1)

    def table(self, chars=None, n=None) -> np.ndarray:
        """Complex character table, rows = characters, columns = n (default 0..q-1)."""
        if chars is None:
            chars = list(self)
        if n is None:
            n = np.arange(self.modulus, dtype=np.int64)
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        if not chars:
            return np.zeros((0, n.size), dtype=complex)
        logs = self.logs(n)
        mask = self.coprime_mask(n)
        scale = np.array([self.exponent // o for o in self.orders], dtype=np.int64)
        exps = np.array([ch.exponents for ch in chars], dtype=np.int64).reshape(len(chars), -1)
        ph = (exps * scale) @ logs.T % self.exponent if self.components else np.zeros((len(chars), n.size), dtype=np.int64)
        roots = np.exp(2j * np.pi * np.arange(self.exponent) / self.exponent)
        return np.where(mask[None, :], roots[ph], 0)


@dataclass(frozen=True)
class CharacterHandle:
    group: CharacterGroup
    exponents: tuple[int, ...]

    @property
    def modulus(self) -> int:
        return self.group.modulus

    @cached_property
    def order(self) -> int:
        return lcm(*(o // math.gcd(o, e) for e, o in zip(self.exponents, self.group.orders)))

    @cached_property
    def conductor(self) -> int:
        return conductor(self)

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    @property
    def is_principal(self) -> bool:
        return not any(self.exponents)

    def phase(self, n: int) -> int | None:
        """Exact phase k with chi(n) = exp(2 pi i k / exponent), or None when chi(n) = 0."""
        ph = int(self.group.phases(self.exponents, [n])[0])
        return None if ph < 0 else ph

    def __call__(self, n: int) -> complex:
        return evaluate(self, n)

    def __mul__(self, other: "CharacterHandle") -> "CharacterHandle":
        if other.group is not self.group:
            raise ValueError("characters belong to different groups")
        return self.group.character(a + b for a, b in zip(self.exponents, other.exponents))

    def conjugate(self) -> "CharacterHandle":
        return self.group.character(-e for e in self.exponents)

    def values(self, n) -> np.ndarray:
        return self.group.table([self], n)[0]


def evaluate(chi: CharacterHandle, n: int) -> complex:
    ph = chi.phase(n)
    if ph is None:
        return 0j
    e = chi.group.exponent
    return complex(np.exp(2j * np.pi * ph / e))


def build_character_group(f: Factorization | int) -> CharacterGroup:
    return _group(f.n if isinstance(f, Factorization) else int(f))


@lru_cache(maxsize=256)
def _group(q: int) -> CharacterGroup:
    return CharacterGroup(factorize(q))


def _component_level(c: Component, e: int, sign_exp: int = 0) -> int:
    """Least j such that the character restricted to component c is induced from p**j.

    Tests induction level by level: the character factors through (Z/p^j)* iff
    it is trivial on the kernel of reduction mod p^j, which is cyclic and
    generated by g^(phi(p^j)) for odd p.
    """
    if e == 0:
        return 0
    if c.p != 2:
        for j in range(1, c.k + 1):
            phi_pj = c.p ** (j - 1) * (c.p - 1)
            if e * phi_pj % c.order == 0:
                return j
        return c.k
    # 2-power, non-sign part: kernel of reduction mod 2^j (j >= 3) is <5^(2^(j-2))>
    for j in range(3, c.k + 1):
        if e * 2 ** (j - 2) % c.order == 0:
            return j
    return c.k


def conductor(chi: CharacterHandle) -> int:
    """Least modulus inducing chi, assembled prime power by prime power."""
    g = chi.group
    levels: dict[int, int] = {}
    sign2 = 0
    five_level = 0
    for c, e in zip(g.components, chi.exponents):
        if c.p == 2:
            if c.sign_part:
                sign2 = e
            else:
                five_level = _component_level(c, e)
        else:
            levels[c.p] = _component_level(c, e)
    out = 1
    if five_level:
        out *= 2**five_level
    elif sign2:
        out *= 4
    for p, j in levels.items():
        out *= p**j
    return out


def conductor_bruteforce(chi: CharacterHandle) -> int:
    """Definitional conductor: least d | q such that chi(n) = 1 whenever n ≡ 1 (mod d), (n, q) = 1."""
    q = chi.modulus
    n = np.arange(1, q + 1)
    vals = chi.values(n)
    for d in sorted(k for k in range(1, q + 1) if q % k == 0):
        sel = (n % d == 1 % d) & (np.gcd(n, q) == 1)
        if np.allclose(vals[sel], 1.0, atol=1e-9):
            return d
    return q


def primitive_characters(r: int) -> list[CharacterHandle]:
    return [chi for chi in build_character_group(r) if chi.conductor == r]


def count_primitive(r: int) -> int:
    """Number of primitive characters mod r (multiplicative; p -> p-2, p^k -> p^(k-2)(p-1)^2)."""
    out = 1
    for p, k in factorize(r).factors:
        if k == 1:
            out *= p - 2
        else:
            out *= p ** (k - 2) * (p - 1) ** 2
    return out


def _as_profile(s) -> tuple[int, int]:
    if isinstance(s, ModulusProfile):
        return s.s, s.radical
    s = int(s)
    return s, radical(s)


def nonlifted_set(s, q: int | None = None) -> list[CharacterHandle]:
    """Characters mod s not induced from any character mod q = rad(s)."""
    s_val, rad = _as_profile(s)
    if q is not None and q != rad:
        raise ArithmeticDomainError(f"q={q} is not rad({s_val})={rad}")
    return [chi for chi in build_character_group(s_val) if rad % chi.conductor != 0]


def conductor_multiset(s) -> dict[int, int]:
    """Conductors occurring in the non-lifted set: {r: #primitive chars mod r} over r | s, r ∤ rad(s).

    Every character mod s is induced by exactly one primitive character, of conductor
    r | s, and it is induced from mod q iff r | q.
    """
    s_val, q = _as_profile(s)
    counts = {r: count_primitive(r) for r in divisors(s_val) if q % r != 0}
    return {r: c for r, c in counts.items() if c}


def restricted_conductor_multiset(s) -> dict[int, int]:
    """The restricted form {r: #primitive chars mod r} over rad(s) | r | s, r > rad(s).

    Agrees with :func:`conductor_multiset` when s is a prime power or squarefree;
    for other s it misses conductors not divisible by every prime of s (s = 12: r = 4).
    """
    s_val, q = _as_profile(s)
    counts = {r: count_primitive(r) for r in divisors(s_val) if r > q and r % q == 0}
    return {r: c for r, c in counts.items() if c}


def nonlifted_conductors(s) -> dict[int, int]:
    """Conductor multiset of :func:`nonlifted_set`, counted character by character."""
    out: dict[int, int] = {}
    for chi in nonlifted_set(s):
        out[chi.conductor] = out.get(chi.conductor, 0) + 1
    return dict(sorted(out.items()))


__all__ = [
    "CharacterGroup", "CharacterHandle", "build_character_group", "evaluate", "conductor",
    "conductor_bruteforce", "primitive_characters", "count_primitive", "nonlifted_set",
    "conductor_multiset", "restricted_conductor_multiset", "nonlifted_conductors", "primitive_root",
    "totient",
]
