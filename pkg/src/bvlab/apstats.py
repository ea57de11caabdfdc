"""Primes in progressions: pi(y;q,a), the error F(y;q,a), its suprema, and the exceptional-moduli census."""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.special import expi

from .arith import ModulusProfile, profile
from .primes import OutOfRangeError, PrimeStore, count_primes

log = logging.getLogger(__name__)

RADICAL_EXPONENT = 9 / 40
DEFAULT_C = 6.0

AT_JUMP, PRE_JUMP, ENDPOINT = "at-jump", "pre-jump", "endpoint"
_SIDES = (AT_JUMP, PRE_JUMP, ENDPOINT)

CSV_FIELDS = ("s", "q", "phi_s", "best_a", "best_y", "F_star", "threshold", "exceptional")


class FamilyWarning(UserWarning):
    pass


# --- Li(x) = ∫_2^x dt / log t ----------------------------------------------

def logarithmic_integral(x: float, rel_tol: float = 1e-12) -> float:
    """Offset logarithmic integral by adaptive Simpson quadrature with Richardson error control."""
    if x < 2:
        raise ValueError(f"Li(x) needs x >= 2, got {x}")
    if not 0 < rel_tol <= 1e-6:
        raise ValueError(f"rel_tol must lie in (0, 1e-6], got {rel_tol}")
    if x == 2:
        return 0.0

    f = lambda t: 1.0 / math.log(t)  # noqa: E731
    a, b = 2.0, float(x)
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    # the integrand is positive, so a crude estimate fixes the absolute scale
    tol = rel_tol * abs(whole)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15 * tol or depth >= 60:
            total += left + right + delta / 15
        else:
            stack.append((m, b, fm, frm, fb, right, tol / 2, depth + 1))
            stack.append((a, m, fa, flm, fm, left, tol / 2, depth + 1))
    return total


_LI2 = float(expi(math.log(2.0)))


def li_offset(x) -> np.ndarray | float:
    """Vectorised Li(x) = li(x) - li(2) via the exponential integral (bulk path for the census)."""
    arr = np.asarray(x, dtype=float)
    out = expi(np.log(arr)) - _LI2
    return float(out) if out.ndim == 0 else out


def _li_at_primes(store: PrimeStore) -> np.ndarray:
    if "li_at_primes" not in store.memo:
        store.memo["li_at_primes"] = li_offset(store.primes.astype(float))
    return store.memo["li_at_primes"]


# --- counts -----------------------------------------------------------------

def count_primes_in_ap(store: PrimeStore, y: float, q: int, a: int) -> int:
    """pi(y; q, a) = #{p <= y : p ≡ a (mod q)}."""
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    ps = store.primes_upto(y)
    if q == 1:
        return int(ps.size)
    return int(np.count_nonzero(ps % q == a % q))


def ap_error(store: PrimeStore, y: float, q: int, a: int, side: str = AT_JUMP) -> float:
    """F(y; q, a); ``side="pre-jump"`` gives the left limit at y (a prime in the class)."""
    phi = profile(q).totient
    cnt = count_primes_in_ap(store, y, q, a)
    if side == PRE_JUMP:
        cnt -= 1
    return cnt - li_offset(float(y)) / phi


@numba.njit(cache=True, nogil=True)
def _scan_classes(primes, li_vals, s, phi, coprime, li_x):
    cnt = np.zeros(s, np.int64)
    best = np.full(s, -1.0)
    pos = np.full(s, -1, np.int64)
    side = np.zeros(s, np.int8)
    for i in range(primes.size):
        r = primes[i] % s
        if not coprime[r]:
            continue
        c = cnt[r] + 1
        cnt[r] = c
        main = li_vals[i] / phi
        # left limit first: candidates are visited in increasing y
        v = abs((c - 1) - main)
        if v > best[r]:
            best[r] = v
            pos[r] = i
            side[r] = 1
        v = abs(c - main)
        if v > best[r]:
            best[r] = v
            pos[r] = i
            side[r] = 0
    for r in range(s):
        if coprime[r]:
            v = abs(cnt[r] - li_x / phi)
            if v > best[r]:
                best[r] = v
                pos[r] = -1
                side[r] = 2
    return best, pos, side, cnt


@dataclass(frozen=True)
class ApErrorRecord:
    """F*(x, q) together with the residue a and point y where it is attained."""

    modulus: int
    best_residue: int
    best_point: float
    value: float
    side: str
    x: float

    def recompute(self, store: PrimeStore) -> float:
        if self.side == ENDPOINT:
            return abs(ap_error(store, self.x, self.modulus, self.best_residue))
        return abs(ap_error(store, self.best_point, self.modulus, self.best_residue, self.side))


def class_errors(store: PrimeStore, x: float, s: int):
    """Per-residue maxima of |F(y; s, a)| over y <= x; returns (best, pos, side, counts, coprime)."""
    if x > store.limit:
        raise OutOfRangeError(f"x={x} exceeds store limit {store.limit}")
    if x < 2:
        raise ValueError(f"x must be >= 2, got {x}")
    phi = profile(s).totient
    n = np.searchsorted(store.primes, math.floor(x), side="right")
    coprime = np.gcd(np.arange(s), s) == 1
    best, pos, side, cnt = _scan_classes(store.primes[:n], _li_at_primes(store)[:n], int(s),
                                         float(phi), coprime, li_offset(float(x)))
    return best, pos, side, cnt, coprime


def sup_error(store: PrimeStore, x: float, prof: ModulusProfile | int) -> ApErrorRecord:
    """F*(x, s) = sup over y <= x and coprime a of |F(y; s, a)|.

    y -> F(y; s, a) is a step function with unit jumps at primes in the class minus a
    continuous increasing function, so on [2, x] it attains its maximum at a jump
    (value from the right) and its infimum just before a jump or at y = x.  Scanning
    those points for every coprime class therefore gives the supremum exactly.
    """
    s = prof.s if isinstance(prof, ModulusProfile) else int(prof)
    best, pos, side, _, coprime = class_errors(store, x, s)
    masked = np.where(coprime, best, -np.inf)
    a = int(np.argmax(masked))
    if not coprime[a]:
        raise RuntimeError(f"no coprime residue mod {s}")
    i = int(pos[a])
    y = float(x) if i < 0 else float(store.primes[i])
    return ApErrorRecord(s, a, y, float(best[a]), _SIDES[int(side[a])], float(x))


# --- families ---------------------------------------------------------------

@dataclass
class ModuliFamily:
    kind: str
    Q: float
    members: list[ModulusProfile]
    radical_bound: float | None = None
    prime_bound: float | None = None
    x: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def moduli(self) -> list[int]:
        return [m.s for m in self.members]

    def check(self) -> None:
        for m in self.members:
            if not self.Q < m.s <= 2 * self.Q:
                raise ValueError(f"member {m.s} outside ({self.Q}, {2 * self.Q}]")
        for i, m in enumerate(self.members):
            for n in self.members[i + 1:]:
                if math.gcd(m.s, n.s) != 1:
                    raise ValueError(f"members {m.s} and {n.s} are not coprime")
        if self.kind == "prime-powers":
            for m in self.members:
                if len(m.factorization.factors) != 1 or m.radical > self.prime_bound:
                    raise ValueError(f"{m.s} is not a power of a prime <= {self.prime_bound}")
        if self.kind == "coprime-radical-bounded":
            for m in self.members:
                if m.radical > self.radical_bound:
                    raise ValueError(f"rad({m.s}) = {m.radical} exceeds {self.radical_bound}")


def log_x(x: float) -> float:
    return math.log(x)


def _primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return [int(p) for p in np.flatnonzero(flags)]


def generate_family(x: float, Q: float, kind: str = "prime-powers", *, prime_bound: float | None = None,
                    C: float = DEFAULT_C, radical_bound: float | None = None,
                    radical_exponent: float = RADICAL_EXPONENT, epsilon: float | None = None,
                    members=None) -> ModuliFamily:
    """Build a pairwise coprime family of moduli in (Q, 2Q].

    ``prime-powers``: for each prime p <= prime_bound (default (log x)^C), the power
    p^N in (Q, 2Q] if there is one.  ``coprime-radical-bounded``: scan (Q, 2Q] upwards,
    admitting s when rad(s) <= radical_bound (default x^(9/40)) and s is coprime to
    everything admitted so far.  ``explicit-list``: ``members`` as given.
    """
    notes: list[str] = []
    if epsilon is not None and Q < x**epsilon:
        notes.append(f"Q={Q} is below x^epsilon={x**epsilon:.6g}")
    lo, hi = math.floor(Q) + 1, math.floor(2 * Q)
    if kind == "prime-powers":
        if prime_bound is None:
            prime_bound = math.log(x) ** C
        if C < 6:
            notes.append(f"C={C} is below 6")
        found = []
        for p in _primes_upto(int(min(prime_bound, hi))):
            pk = p
            while pk <= Q:
                pk *= p
            if pk <= hi:
                found.append(pk)
        mods = sorted(found)
    elif kind == "coprime-radical-bounded":
        if radical_bound is None:
            radical_bound = x**radical_exponent
        used = 1
        mods = []
        for s in range(lo, hi + 1):
            prof = profile(s)
            if prof.radical <= radical_bound and math.gcd(s, used) == 1:
                mods.append(s)
                used *= prof.radical
    elif kind == "explicit-list":
        mods = sorted(int(m) for m in (members or []))
    else:
        raise ValueError(f"unknown family kind {kind!r}")

    fam = ModuliFamily(kind, Q, [profile(s) for s in mods], radical_bound, prime_bound, x, notes)
    fam.check()
    if not fam.members:
        msg = f"empty {kind} family for Q={Q}"
        fam.warnings.append(msg)
        warnings.warn(msg, FamilyWarning, stacklevel=2)
    return fam


# --- census -----------------------------------------------------------------

@dataclass(frozen=True)
class CensusRow:
    s: int
    q: int
    phi_s: int
    best_a: int
    best_y: float
    F_star: float
    threshold: float
    exceptional: int


@dataclass
class CensusReport:
    family: ModuliFamily
    x: float
    A: float
    pi_x: int
    log_x: float
    rows: list[CensusRow]
    radical_rows: list[dict]
    reference_bounds: dict
    warnings: list[str] = field(default_factory=list)

    @property
    def exceptional(self) -> list[int]:
        return [r.s for r in self.rows if r.exceptional]

    @property
    def counts(self) -> tuple[int, int]:
        return len(self.exceptional), len(self.rows)

    @property
    def discarded_radicals(self) -> list[int]:
        return [r["q"] for r in self.radical_rows if not r["in_Q"]]

    def threshold(self, s: int) -> float:
        return threshold(self.pi_x, profile(s).totient, self.log_x, self.A)

    def summary(self) -> dict:
        n_exc, n_all = self.counts
        out = {
            "kind": self.family.kind, "x": self.x, "Q": self.family.Q, "A": self.A,
            "members": n_all, "exceptional": n_exc,
            "discarded_radicals": len(self.discarded_radicals),
            "card_Q": sum(1 for r in self.radical_rows if r["in_Q"]),
        }
        for name, value in self.reference_bounds.items():
            out[f"bound_{name}"] = value
            out[f"ratio_{name}"] = n_exc / value if value else None
        return out

    def to_json(self) -> dict:
        return {
            "x": self.x, "A": self.A, "pi_x": self.pi_x, "log_x": self.log_x,
            "family": {"kind": self.family.kind, "Q": self.family.Q, "moduli": self.family.moduli,
                       "radical_bound": self.family.radical_bound,
                       "prime_bound": self.family.prime_bound, "warnings": self.family.warnings},
            "rows": [asdict(r) for r in self.rows],
            "radicals": self.radical_rows,
            "reference_bounds": self.reference_bounds,
            "summary": self.summary(),
            "warnings": self.warnings,
        }


def threshold(pi_x: int, phi: int, L: float, A: float) -> float:
    return pi_x / (phi * L**A)


def reference_bounds(x: float, Q: float, A: float, pi_x: int, card_Q: int) -> dict:
    """Reference bound expressions for the exceptional count, implicit constants set to 1."""
    L = math.log(x)
    out = {
        "thm1": L ** (34 + A),
        "thm2": L ** (14 + 2 * A),
        "thm3": L ** (36 + A) + L ** (14 + 2 * A) * (1 + Q**2 * x**-0.5),
    }
    # the squared-error remainder carries an undefined exponent 2B; report B = A+1 and B = A+2
    for B_name, B in (("B=A+1", A + 1), ("B=A+2", A + 2)):
        out[f"squared_error_{B_name}"] = pi_x**2 * card_Q / (Q**2 * L ** (2 * B))
    return out


def _sup_errors(store: PrimeStore, x: float, moduli: list[int], workers: int) -> dict[int, ApErrorRecord]:
    moduli = sorted(set(moduli))
    if workers <= 1 or len(moduli) <= 1:
        recs = [sup_error(store, x, s) for s in moduli]
    else:
        _li_at_primes(store)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(lambda s: sup_error(store, x, s), moduli))
    return dict(zip(moduli, recs))


def exceptional_census(store: PrimeStore, x: float, family: ModuliFamily, A: float,
                       workers: int = 1, records: dict[int, ApErrorRecord] | None = None) -> CensusReport:
    """Classify each member s by F*(x,s) > pi(x)/(phi(s) L^A), and each radical q by the A+2 threshold."""
    L = math.log(x)
    pi_x = count_primes(store, x)
    mods = family.moduli + [m.radical for m in family.members]
    if records is None:
        records = {}
    missing = [m for m in mods if m not in records]
    records.update(_sup_errors(store, x, missing, workers))

    rows = []
    for m in family.members:
        rec = records[m.s]
        thr = threshold(pi_x, m.totient, L, A)
        rows.append(CensusRow(m.s, m.radical, m.totient, rec.best_residue, rec.best_point,
                              rec.value, thr, int(rec.value > thr)))
    radical_rows = []
    for m in family.members:
        q = m.radical
        rec = records[q]
        thr = threshold(pi_x, profile(q).totient, L, A + 2)
        radical_rows.append({"s": m.s, "q": q, "F_star_q": rec.value, "threshold_A_plus_2": thr,
                             "in_Q": rec.value <= thr})
    card_Q = sum(1 for r in radical_rows if r["in_Q"])
    report = CensusReport(family, float(x), float(A), pi_x, L, rows, radical_rows,
                          reference_bounds(x, family.Q, A, pi_x, card_Q), list(family.warnings))
    return report


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_census_csv(report: CensusReport, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])
    return path


def write_census_json(report: CensusReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return path


def read_census_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
