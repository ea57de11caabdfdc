"""Type I / type II differences between the sets mod s and mod rad(s), and their dispersion.

All sums are exact apart from floating point summation: inner counts are floor
expressions and inner coefficient sums are taken over explicit progressions.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analytic import contour_nodes, perron_budget
from .arith import ModulusProfile, profile
from .characters import build_character_group, nonlifted_set, primitive_characters

ALPHA = Fraction(1, 3)
BETA = Fraction(1, 3)


@dataclass(frozen=True)
class BilinearConfig:
    x: float
    prof: ModulusProfile
    e: int = 1
    d: int | None = None
    y: float | None = None
    alpha: Fraction = ALPHA
    beta: Fraction = BETA
    M: float | None = None
    epsilon: float = 0.1

    def __post_init__(self):
        if not isinstance(self.prof, ModulusProfile):
            object.__setattr__(self, "prof", profile(int(self.prof)))
        if math.gcd(self.e, self.s) != 1:
            raise ValueError(f"e={self.e} is not coprime to s={self.s}")
        if self.d is None:
            object.__setattr__(self, "d", self.e % self.q)
        if (self.e - self.d) % self.q:
            raise ValueError(f"need e ≡ d (mod q): e={self.e}, d={self.d}, q={self.q}")
        if self.y is None:
            object.__setattr__(self, "y", float(self.x))
        if self.y > self.x:
            raise ValueError("y must not exceed x")
        if self.M is None:
            object.__setattr__(self, "M", 2 * math.sqrt(self.x) + 1)

    @property
    def s(self) -> int:
        return self.prof.s

    @property
    def q(self) -> int:
        return self.prof.radical

    @property
    def lam(self) -> Fraction:
        return Fraction(self.q, self.s)

    @property
    def m_range(self) -> tuple[float, float]:
        """(x^alpha, x^(alpha+beta)], the type II range of m."""
        return self.x ** float(self.alpha), self.x ** float(self.alpha + self.beta)


# --- coefficients -----------------------------------------------------------

def coefficients(length: int, seed: int, kind: str = "unit", stream: int = 0) -> np.ndarray:
    """Coefficients indexed 0..length (index 0 unused, set to 0), all of modulus <= 1.

    The value at each index depends only on (seed, stream, index): a longer request
    extends a shorter one.
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, stream]))
    n = length + 1
    if kind == "unit":
        out = np.exp(2j * np.pi * rng.random(n))
    elif kind == "sign":
        out = np.where(rng.random(n) < 0.5, -1.0, 1.0).astype(complex)
    elif kind == "real":
        out = (2 * rng.random(n) - 1).astype(complex)
    elif kind == "ones":
        out = np.ones(n, dtype=complex)
    else:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    out[0] = 0
    return out


def sieve_weights(length: int, x: float, epsilon: float, primes: np.ndarray) -> np.ndarray:
    """c_r = 1 on {1} and on primes r > x^epsilon, else 0."""
    c = np.zeros(length + 1)
    if length >= 1:
        c[1] = 1
    ps = primes[(primes > x**epsilon) & (primes <= length)]
    c[ps] = 1
    return c


def count_progression(N: int, c: int, k: int) -> int:
    """#{1 <= n <= N : n ≡ c (mod k)}."""
    if N < 1:
        return 0
    c0 = c % k or k
    return (N - c0) // k + 1 if c0 <= N else 0


def count_in_interval(lo: float, hi: float, c: int, k: int) -> int:
    """#{lo < m <= hi : m ≡ c (mod k)} for real lo <= hi."""
    return _count_upto(math.floor(hi), c, k) - _count_upto(math.floor(lo), c, k)


def _count_upto(N: int, c: int, k: int) -> int:
    # counts 0 < m <= N, and also handles N <= 0
    if N <= 0:
        return 0
    return count_progression(N, c, k)


# --- type I -----------------------------------------------------------------

def type_one_difference(cfg: BilinearConfig, a: np.ndarray) -> complex:
    """sum_{m <= M, (m,q)=1} a_m (#{n <= y/m : n ≡ e/m (s)} - (q/s) #{n <= y/m : n ≡ d/m (q)})."""
    s, q = cfg.s, cfg.q
    top = min(math.floor(cfg.M), len(a) - 1)
    total = 0j
    for m in range(1, top + 1):
        if a[m] == 0 or math.gcd(m, q) != 1:
            continue
        N = math.floor(cfg.y / m)
        inv = pow(m, -1, s) if s > 1 else 0
        ca = count_progression(N, cfg.e * inv, s)
        cb = count_progression(N, cfg.d * inv, q)
        # s*ca - q*cb is an exact integer
        total += a[m] * ((s * ca - q * cb) / s)
    return total


# --- type II ----------------------------------------------------------------

def _inner_sums(cfg: BilinearConfig, b: np.ndarray, m: int, N: int) -> tuple[complex, complex]:
    s, q = cfg.s, cfg.q
    inv = pow(m, -1, s) if s > 1 else 0
    ra = cfg.e * inv % s or s
    rb = cfg.d * inv % q or q
    N = min(N, len(b) - 1)
    sa = b[ra : N + 1 : s].sum() if ra <= N else 0j
    sb = b[rb : N + 1 : q].sum() if rb <= N else 0j
    return complex(sa), complex(sb)


def sigma_block(cfg: BilinearConfig, K: float, K2: float, a: np.ndarray, b: np.ndarray) -> complex:
    """sum_{K < m <= K2, (m,q)=1} a_m (sum_{n <= y/m, n ≡ e/m (s)} b_n - (q/s) sum_{n <= y/m, n ≡ d/m (q)} b_n)."""
    lam = cfg.q / cfg.s
    total = 0j
    for m in range(math.floor(K) + 1, min(math.floor(K2), len(a) - 1) + 1):
        if a[m] == 0 or math.gcd(m, cfg.q) != 1:
            continue
        sa, sb = _inner_sums(cfg, b, m, math.floor(cfg.y / m))
        total += a[m] * (sa - lam * sb)
    return total


def type_two_difference(cfg: BilinearConfig, a: np.ndarray, b: np.ndarray) -> complex:
    lo, hi = cfg.m_range
    return sigma_block(cfg, lo, hi, a, b)


def dyadic_blocks(lo: float, hi: float) -> list[tuple[float, float]]:
    """(K, K') with K < m <= K', K' = min(2K, hi), covering (lo, hi]."""
    out = []
    K = lo
    while K < hi:
        K2 = min(2 * K, hi)
        out.append((K, K2))
        K = K2
    return out


# --- dispersion -------------------------------------------------------------

@dataclass
class DispersionBreakdown:
    K: float
    z: complex
    L_inner: float
    sigma_prime: float
    sigma1: complex
    sigma2: complex
    sigma3: complex
    sigma4: complex
    residual: float
    main_term: float
    character_form: float
    character_gap: float
    conductor_form: float
    restricted_conductor_form: float

    @property
    def relative_residual(self) -> float:
        return self.residual / (1 + abs(self.sigma_prime))

    def to_json(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, complex):
                d[k] = [v.real, v.imag]
        d["relative_residual"] = self.relative_residual
        return d


def twisted(b: np.ndarray, z: complex, L: float) -> np.ndarray:
    """b_n(z) = b_n n^(-z) for n <= L (index 0 is 0)."""
    n_max = min(math.floor(L), len(b) - 1)
    if n_max < 1:
        return np.zeros(1, dtype=complex)
    n = np.arange(1, n_max + 1)
    out = np.zeros(n_max + 1, dtype=complex)
    out[1:] = b[1 : n_max + 1] * np.exp(-z * np.log(n))
    return out


def _class_sums(bz: np.ndarray, k: int) -> np.ndarray:
    n = np.arange(bz.size)
    return (np.bincount(n % k, weights=bz.real, minlength=k)
            + 1j * np.bincount(n % k, weights=bz.imag, minlength=k))


def sigma_prime_direct(cfg: BilinearConfig, K: float, bz: np.ndarray) -> float:
    """sum_{K < m <= 2K, (m,q)=1} |sum_{n ≡ e/m (s)} b_n(z) - (q/s) sum_{n ≡ d/m (q)} b_n(z)|^2."""
    s, q = cfg.s, cfg.q
    lam = q / s
    N = bz.size - 1
    total = 0.0
    for m in range(math.floor(K) + 1, math.floor(2 * K) + 1):
        if math.gcd(m, q) != 1:
            continue
        inv = pow(m, -1, s) if s > 1 else 0
        ra = cfg.e * inv % s or s
        rb = cfg.d * inv % q or q
        u = bz[ra : N + 1 : s].sum() if ra <= N else 0j
        v = bz[rb : N + 1 : q].sum() if rb <= N else 0j
        total += abs(u - lam * v) ** 2
    return total


def dispersion_terms(cfg: BilinearConfig, K: float, bz: np.ndarray):
    """Sigma_1..Sigma_4 with exact counts of m in (K, 2K], grouped by residue class of n."""
    s, q = cfg.s, cfg.q
    lam = q / s
    BS = _class_sums(bz, s)
    BQ = _class_sums(bz, q)
    cs = np.arange(s)
    unit_s = np.gcd(cs, s) == 1
    cnt_s = np.zeros(s)
    for c in cs[unit_s]:
        c = int(c)
        t = cfg.e * pow(c, -1, s) % s if s > 1 else 0
        cnt_s[c] = count_in_interval(K, 2 * K, t, s)
    cnt_q = np.zeros(q)
    for c in range(q):
        if math.gcd(c, q) == 1:
            t = cfg.d * pow(c, -1, q) % q if q > 1 else 0
            cnt_q[c] = count_in_interval(K, 2 * K, t, q)
    BQ_of_s = BQ[cs % q]
    w = cnt_s * unit_s
    s1 = complex(np.sum(w * np.abs(BS) ** 2))
    s2 = complex(lam * np.sum(w * BS * np.conj(BQ_of_s)))
    s3 = complex(lam * np.sum(w * np.conj(BS) * BQ_of_s))
    unit_q = np.gcd(np.arange(q), q) == 1
    s4 = complex(lam**2 * np.sum(cnt_q * unit_q * np.abs(BQ) ** 2))
    return s1, s2, s3, s4, BS, BQ


def dispersion_double_sum(cfg: BilinearConfig, K: float, bz: np.ndarray):
    """Sigma_1..Sigma_4 as literal double sums over (n1, n2); quadratic in L, for checking."""
    s, q = cfg.s, cfg.q
    lam = q / s
    N = bz.size - 1
    n = np.arange(1, N + 1)
    ok = np.gcd(n, q) == 1
    n, v = n[ok], bz[1:][ok]
    inv_s = np.array([pow(int(k), -1, s) if s > 1 else 0 for k in n])
    inv_q = np.array([pow(int(k), -1, q) if q > 1 else 0 for k in n])
    cnt_s = np.array([count_in_interval(K, 2 * K, cfg.e * i % s, s) for i in inv_s])
    cnt_q = np.array([count_in_interval(K, 2 * K, cfg.d * i % q, q) for i in inv_q])
    same_s = (n[:, None] - n[None, :]) % s == 0
    same_q = (n[:, None] - n[None, :]) % q == 0
    prod = v[:, None] * np.conj(v)[None, :]
    s1 = complex(np.sum(prod * same_s * cnt_s[:, None]))
    s2 = complex(lam * np.sum(prod * same_q * cnt_s[:, None]))
    s3 = complex(lam * np.sum(prod * same_q * cnt_s[None, :]))
    s4 = complex(lam**2 * np.sum(prod * same_q * cnt_q[:, None]))
    return s1, s2, s3, s4


def _char_sums(chars, group, class_sums: np.ndarray) -> np.ndarray:
    # sum_n b_n(z) chi(n) = sum_{c mod modulus} chi(c) * (class sum at c)
    if not chars:
        return np.zeros(0, dtype=complex)
    T = group.table(chars)
    return T @ class_sums


def character_form(cfg: BilinearConfig, K: float, BS: np.ndarray) -> tuple[float, float, float]:
    """K/phi(s^2) times the mean square over the non-lifted characters, in three groupings.

    Returns (over chi in X(s) directly, over primitive characters of every conductor
    r | s with r ∤ q, over primitive characters with q | r | s, r > q only).
    """
    s, q = cfg.s, cfg.q
    weight = K / (s * cfg.prof.totient)
    G = build_character_group(s)
    direct = float(np.sum(np.abs(_char_sums(nonlifted_set(cfg.prof), G, BS)) ** 2))
    by_cond = 0.0
    restricted = 0.0
    for r in sorted(d for d in range(1, s + 1) if s % d == 0 and q % d != 0):
        prim = primitive_characters(r)
        if not prim:
            continue
        Gr = build_character_group(r)
        # chi mod r evaluated on n: gcd(n, r) = 1 differs from gcd(n, s) = 1 only when
        # rad(r) != rad(s), so fold class sums mod s onto mod r over units of s only
        cls = np.zeros(r, dtype=complex)
        units = np.flatnonzero(np.gcd(np.arange(s), s) == 1)
        np.add.at(cls, units % r, BS[units])
        val = float(np.sum(np.abs(_char_sums(prim, Gr, cls)) ** 2))
        by_cond += val
        if r > q and r % q == 0:
            restricted += val
    return weight * direct, weight * by_cond, weight * restricted


def dispersion_decompose(cfg: BilinearConfig, K: float, z: complex, b: np.ndarray) -> DispersionBreakdown:
    L = cfg.x / K
    bz = twisted(b, z, L)
    sp = sigma_prime_direct(cfg, K, bz)
    s1, s2, s3, s4, BS, BQ = dispersion_terms(cfg, K, bz)
    resid = abs(sp - (s1 - s2 - s3 + s4))
    s, q = cfg.s, cfg.q
    unit_s = np.gcd(np.arange(s), s) == 1
    unit_q = np.gcd(np.arange(q), q) == 1
    main = (K / s) * float(np.sum(np.abs(BS[unit_s]) ** 2)) \
        - (K * q / s**2) * float(np.sum(np.abs(BQ[unit_q]) ** 2))
    chi_form, cond_form, restricted_form = character_form(cfg, K, BS)
    return DispersionBreakdown(float(K), complex(z), float(L), float(sp), s1, s2, s3, s4, float(resid),
                               float(main), chi_form, float(sp - chi_form), cond_form, restricted_form)


# --- Perron split of a dyadic block -----------------------------------------

@dataclass
class PerronBlock:
    K: float
    K2: float
    c: float
    T: float
    direct: complex
    contour: complex
    error: float
    reference_budget: float
    perron_budget: float
    integral: float
    cs_factor: float
    majorant: float
    ratio: float
    n_nodes: int

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("direct", "contour"):
            d[k] = [d[k].real, d[k].imag]
        return d


def _block_polynomial(cfg: BilinearConfig, K: float, K2: float, a: np.ndarray, b: np.ndarray, L: float):
    """Sigma(K, z) as sum_k W_k (y/k)^z over k = m*n, with n <= L in either class."""
    s, q = cfg.s, cfg.q
    lam = q / s
    nL = min(math.floor(L), len(b) - 1)
    acc: dict[int, complex] = {}
    for m in range(math.floor(K) + 1, min(math.floor(K2), len(a) - 1) + 1):
        if a[m] == 0 or math.gcd(m, q) != 1:
            continue
        inv = pow(m, -1, s) if s > 1 else 0
        ra = cfg.e * inv % s or s
        rb = cfg.d * inv % q or q
        for n in range(ra, nL + 1, s):
            acc[m * n] = acc.get(m * n, 0j) + a[m] * b[n]
        for n in range(rb, nL + 1, q):
            acc[m * n] = acc.get(m * n, 0j) - lam * a[m] * b[n]
    ks = np.array(sorted(acc), dtype=float)
    W = np.array([acc[int(k)] for k in ks], dtype=complex)
    return ks, W


def perron_block(cfg: BilinearConfig, K: float, a: np.ndarray, b: np.ndarray, K2: float | None = None,
                 nodes_per_panel: int = 8, chunk: int = 2048) -> PerronBlock:
    """Sigma(K) directly and through the truncated contour integral, c = 1/log L, T = L log L."""
    lo, hi = cfg.m_range
    if K2 is None:
        K2 = min(2 * K, hi)
    L = cfg.x / K
    c = 1 / math.log(L)
    T = L * math.log(L)
    direct = sigma_block(cfg, K, K2, a, b)
    ks, W = _block_polynomial(cfg, K, K2, a, b, L)
    if ks.size == 0:
        return PerronBlock(K, K2, c, T, 0j, 0j, 0.0, K, 0.0, 0.0, 0.0, K**2, 0.0, 0)
    logX = np.log(cfg.y) - np.log(ks)
    t, w = contour_nodes(c, T, float(np.max(np.abs(logX))), nodes_per_panel)
    zs = c + 1j * t
    contour = 0j
    integral = 0.0
    for i in range(0, t.size, chunk):
        zc = zs[i : i + chunk]
        vals = np.exp(np.outer(zc, logX)) @ W
        contour += np.sum(w[i : i + chunk] * vals / zc)
        integral += float(np.sum(w[i : i + chunk] * np.abs(vals) ** 2 / np.abs(zc)))
    contour /= 2 * np.pi
    cs_factor = 2 * math.asinh(T / c)
    majorant = math.log(cfg.x) * integral + K**2
    # Perron truncation budget summed over m, one term per inner progression
    pb = 0.0
    lam = cfg.q / cfg.s
    for m in range(math.floor(K) + 1, min(math.floor(K2), len(a) - 1) + 1):
        if a[m] == 0 or math.gcd(m, cfg.q) != 1:
            continue
        N = cfg.y / m
        pb += abs(a[m]) * (1 + lam) * perron_budget(N, c, T, np.abs(b[: math.floor(L) + 1]))
    return PerronBlock(float(K), float(K2), c, T, complex(direct), complex(contour),
                       float(abs(direct - contour)), float(K), float(pb), integral, cs_factor, majorant,
                       float(abs(direct) ** 2 / majorant), int(t.size))


# --- budgets ----------------------------------------------------------------

def y_budget(x: float, Q: float, card_Q: int) -> float:
    """(x^2/Q^2 + x^(3/2) + x^(5/3) #Q / Q + x #Q) (log x)^4."""
    return (x**2 / Q**2 + x**1.5 + x ** (5 / 3) * card_Q / Q + x * card_Q) * math.log(x) ** 4


def type_one_budget_holds(x: float, Q: float, card_Q: int, M: float | None = None) -> bool:
    """M^2 #Q <= Y with the default M = 2 x^(1/2) + 1."""
    if M is None:
        M = 2 * math.sqrt(x) + 1
    return M**2 * card_Q <= y_budget(x, Q, card_Q)


def bound1(x: float, Q: float, K: float, card_Q: int) -> float:
    return (x**2 / Q**2 + K * x + x**2 * card_Q / (Q * K) + K**2 * card_Q) * math.log(x) ** 2


def bound2(x: float, Q: float, K: float, card_Q: int) -> float:
    return (x**2 / Q**2 + x**2 / K + K * x * card_Q / Q + x**2 * card_Q / K**2) * math.log(x) ** 2


@dataclass
class AveragedSquare:
    K: float
    Q: float
    card_Q: int
    total: float
    terms: list[float] = field(default_factory=list)
    bound1: float = 0.0
    bound2: float = 0.0
    selected: str = "bound1"
    ratio1: float = 0.0
    ratio2: float = 0.0
    ratio: float = 0.0


def averaged_square_sum(configs: list[BilinearConfig], K: float, a: np.ndarray, b: np.ndarray,
                        Q: float | None = None, K2: float | None = None) -> AveragedSquare:
    """sum over the family of |Sigma_q(K)|^2, with both reference bounds (unit constants)."""
    if not configs:
        return AveragedSquare(K, Q or 0.0, 0, 0.0)
    xs = {c.x for c in configs}
    if len(xs) != 1:
        raise ValueError(f"configs disagree on x: {sorted(xs)}")
    x = xs.pop()
    if Q is None:
        Q = max(c.s for c in configs) / 2
    terms = []
    for cfg in configs:
        hi = cfg.m_range[1]
        terms.append(abs(sigma_block(cfg, K, K2 if K2 is not None else min(2 * K, hi), a, b)) ** 2)
    total = float(sum(terms))
    n = len(configs)
    b1, b2 = bound1(x, Q, K, n), bound2(x, Q, K, n)
    sel = "bound1" if K <= math.sqrt(x) else "bound2"
    return AveragedSquare(K, Q, n, total, terms, b1, b2, sel, total / b1, total / b2,
                          total / (b1 if sel == "bound1" else b2))


def write_diagnostic(path: str | Path, cfg: BilinearConfig, br: DispersionBreakdown, Q: float,
                     bounds: dict | None = None, ratios: dict | None = None) -> Path:
    rec = {"x": cfg.x, "Q": Q, "s": cfg.s, "q": cfg.q, "K": br.K, "z": [br.z.real, br.z.imag],
           "sigma_prime": br.sigma_prime}
    for i, v in enumerate((br.sigma1, br.sigma2, br.sigma3, br.sigma4), start=1):
        rec[f"sigma{i}"] = [v.real, v.imag]
    rec.update({"residual": br.residual, "character_gap": br.character_gap,
                "bounds": bounds or {}, "ratios": ratios or {}})
    path = Path(path)
    path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return path
