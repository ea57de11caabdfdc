"""Randomised verification suites.

Each suite returns a SuiteReport.  ``failures`` lists hard-assertion failures
(exact identities and true inequalities); ``diagnostics`` hold ratios and other
report-only numbers that never fail a run.
"""
from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import PERRON_CALIBRATION, large_sieve_sides, perron_truncated
from .arith import profile, totient
from .bilinear import (BilinearConfig, coefficients, dispersion_decompose, dispersion_double_sum,
                       dispersion_terms, twisted)
from .characters import (build_character_group, conductor, conductor_bruteforce, conductor_multiset,
                         nonlifted_conductors, nonlifted_set, restricted_conductor_multiset)
from .primes import PrimeStore, build_prime_store
from .sieve_sets import SieveSetSpec, buchstab_residual, spi_discrepancy

SUITES = ("buchstab", "dispersion", "orthogonality", "large-sieve", "perron", "spi")
_MAX_LISTED = 20


@dataclass
class SuiteReport:
    suite: str
    seed: int
    checks: int = 0
    failures: list[dict] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    seconds: float = 0.0
    n_failed: int = 0

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def check(self, ok: bool, **info) -> bool:
        self.checks += 1
        if not ok:
            self.n_failed += 1
            if len(self.failures) < _MAX_LISTED:
                self.failures.append(info)
        return ok

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}: {self.checks - self.n_failed}/{self.checks} checks ({self.seconds:.1f}s)"


def _store(limit: int, store: PrimeStore | None) -> PrimeStore:
    if store is not None and store.limit >= limit:
        return store
    return build_prime_store(limit)


def _unit(rng: random.Random, s: int) -> int:
    while True:
        e = rng.randrange(1, s + 1)
        if math.gcd(e, s) == 1:
            return e


# --- buchstab -------------------------------------------------------------------

def verify_buchstab(seed: int = 1, trials: int = 200, y_max: int = 10**5,
                    store: PrimeStore | None = None) -> SuiteReport:
    rep = SuiteReport("buchstab", seed)
    rng = random.Random(seed)
    store = _store(y_max, store)
    second = []
    for i in range(trials):
        y = rng.randint(10, y_max)
        k = rng.randint(1, 200)
        spec = SieveSetSpec(y, k, rng.randrange(k), rng.choice((1, 1, 1, 2, 3, 6, 10)))
        u = sorted((rng.uniform(0, 0.6), rng.uniform(0, 0.6)))
        z_low, z_high = max(1.0, y ** u[0]), max(1.0, y ** u[1])
        res = buchstab_residual(spec, z_low, z_high, store)
        rep.check(type(res.residual) is int and res.residual == 0,
                  trial=i, spec=asdict(spec), z_low=z_low, z_high=z_high, residual=res.residual)
        # the second form in the regime z_low = y^(1/3), z_high = y^(1/2)
        reg = buchstab_residual(SieveSetSpec(y, k, spec.residue), y ** (1 / 3), y**0.5, store)
        second.append(reg.second_residual)
    rep.diagnostics = {
        "second_form_residual_nonzero": sum(1 for v in second if v),
        "second_form_residual_max": max(second, default=0),
        "second_form_trials": len(second),
    }
    return rep


# --- dispersion -------------------------------------------------------------------

def verify_dispersion(seed: int = 1, trials: int = 100, x_max: float = 1e4, s_max: int = 200,
                      multiset_trials: int = 50, multiset_s_max: int = 10**4, tol: float = 1e-9) -> SuiteReport:
    rep = SuiteReport("dispersion", seed)
    rng = random.Random(seed)
    worst = worst_chi = 0.0
    restricted_gap = []
    for i in range(trials):
        x = rng.uniform(1e3, x_max)
        s = rng.randint(2, s_max)
        cfg = BilinearConfig(x, profile(s), e=_unit(rng, s))
        K = x ** rng.uniform(0.2, 0.75)
        z = complex(rng.uniform(0.02, 1.0), rng.uniform(-30, 30))
        b = coefficients(math.floor(x / K) + 1, seed, rng.choice(("unit", "sign", "real")), stream=i)
        br = dispersion_decompose(cfg, K, z, b)
        worst = max(worst, br.relative_residual)
        rep.check(br.relative_residual <= tol, trial=i, check="residual", s=s, x=x, K=K,
                  relative_residual=br.relative_residual)
        chi_gap = abs(br.main_term - br.character_form) / (1 + abs(br.main_term))
        worst_chi = max(worst_chi, chi_gap)
        rep.check(chi_gap <= tol, trial=i, check="character_form", s=s, gap=chi_gap)
        rep.check(abs(br.conductor_form - br.character_form) <= tol * (1 + abs(br.character_form)),
                  trial=i, check="conductor_form", s=s, conductor_form=br.conductor_form,
                  character_form=br.character_form)
        restricted_gap.append(abs(br.restricted_conductor_form - br.character_form) / (1 + abs(br.character_form)))
        if br.L_inner <= 1500:
            bz = twisted(b, z, br.L_inner)
            fast = dispersion_terms(cfg, K, bz)[:4]
            slow = dispersion_double_sum(cfg, K, bz)
            scale = 1 + abs(br.sigma_prime)
            rep.check(max(abs(u - v) for u, v in zip(fast, slow)) <= tol * scale,
                      trial=i, check="double_sum", s=s)
    mism_restricted = 0
    for j, s in enumerate(rng.sample(range(2, multiset_s_max + 1), multiset_trials)):
        got = nonlifted_conductors(s)
        rep.check(got == conductor_multiset(s), check="conductor_multiset", s=s)
        mism_restricted += got != restricted_conductor_multiset(s)
    rep.diagnostics = {
        "max_relative_residual": worst,
        "max_character_gap": worst_chi,
        "restricted_form_max_gap": max(restricted_gap, default=0.0),
        "restricted_form_gap_nonzero": sum(1 for g in restricted_gap if g > tol),
        "restricted_form_multiset_mismatches": mism_restricted,
        "multiset_trials": multiset_trials,
    }
    return rep


# --- orthogonality ----------------------------------------------------------------

def verify_orthogonality(seed: int = 1, q_max: int = 60, trials: int = 50, s_max: int = 10**4,
                         tol: float = 1e-12) -> SuiteReport:
    rep = SuiteReport("orthogonality", seed)
    worst = 0.0
    for q in range(1, q_max + 1):
        G = build_character_group(q)
        T = G.table()
        phi = totient(q)
        # sum over chi of chi(a) conj(chi(b)) = phi(q) [a ≡ b, gcd(a, q) = 1]
        cols = T.conj().T @ T
        units = np.gcd(np.arange(q), q) == 1
        expect = phi * np.diag(units.astype(float))
        dev = float(np.max(np.abs(cols - expect))) / phi
        rows = T @ T.conj().T
        dev = max(dev, float(np.max(np.abs(rows - phi * np.eye(len(T))))) / phi)
        worst = max(worst, dev)
        rep.check(dev <= tol, check="orthogonality", q=q, deviation=dev)
        for chi in G:
            rep.check(conductor(chi) == conductor_bruteforce(chi), check="conductor", q=q,
                      exponents=list(chi.exponents))
    rng = random.Random(seed)
    for s in rng.sample(range(2, s_max + 1), trials):
        prof = profile(s)
        n = len(nonlifted_set(prof))
        rep.check(n == prof.totient - totient(prof.radical), check="card_X", s=s, got=n)
    rep.diagnostics = {"max_deviation": worst}
    return rep


# --- large sieve ------------------------------------------------------------------

def verify_large_sieve(seed: int = 1, trials: int = 500, Q_max: int = 30, N_max: int = 200) -> SuiteReport:
    rep = SuiteReport("large-sieve", seed)
    rng = np.random.Generator(np.random.Philox(key=[seed, 7]))
    worst = 0.0
    for i in range(trials):
        Q = int(rng.integers(1, Q_max + 1))
        N = int(rng.integers(1, N_max + 1))
        M = int(rng.integers(0, 1000))
        kind = i % 3
        if kind == 0:
            a = np.exp(2j * np.pi * rng.random(N))
        elif kind == 1:
            a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        else:
            a = (rng.random(N) < 0.2).astype(complex)
        tr = large_sieve_sides(a, Q, M)
        worst = max(worst, tr.ratio)
        rep.check(tr.holds(), trial=i, Q=Q, N=N, M=M, lhs=tr.lhs, rhs=tr.rhs)
        if i % 10 == 0:
            rot = large_sieve_sides(a * np.exp(2j * np.pi * rng.random()), Q, M)
            rep.check(abs(rot.lhs - tr.lhs) <= 1e-9 * (1 + tr.lhs), trial=i, check="rotation")
    for N in (1, 7, 50, 200):
        tr = large_sieve_sides(np.ones(N), 1)
        rep.check(tr.lhs == tr.rhs == N * N, check="equality", N=N, lhs=tr.lhs, rhs=tr.rhs)
    zero = large_sieve_sides(np.zeros(10), 5)
    rep.check(zero.lhs == zero.rhs == zero.ratio == 0, check="zero")
    rep.diagnostics = {"max_ratio": worst}
    return rep


# --- perron -----------------------------------------------------------------------

def _non_integer(rng: random.Random, lo: float, hi: float) -> float:
    while True:
        v = rng.uniform(lo, hi)
        if abs(v - round(v)) > 1e-3:
            return v


def verify_perron(seed: int = 1, trials: int = 100, calibration: float = PERRON_CALIBRATION,
                  log: list | None = None) -> SuiteReport:
    rep = SuiteReport("perron", seed)
    rng = random.Random(seed)
    ratios = []
    for i in range(trials):
        if i % 2 == 0:
            L = rng.randint(10, 200)
            c, T = 1 / math.log(L), L * math.log(L)
            N = _non_integer(rng, 2, L)
            shape = "log"
        else:
            L = rng.randint(2, 200)
            c, T = rng.uniform(0.1, 2.0), rng.uniform(5, 200)
            N = _non_integer(rng, 2, 1.2 * L)
            shape = "generic"
        coeffs = coefficients(L, seed, rng.choice(("unit", "sign", "real", "ones")), stream=1000 + i)
        tr = perron_truncated(coeffs, N, c, T, calibration)
        ratios.append(tr.deviation / tr.budget)
        rep.check(tr.within_budget, trial=i, shape=shape, L=L, N=N, c=c, T=T,
                  deviation=tr.deviation, budget=tr.budget)
        if log is not None:
            log.append(dict(tr.to_json(), shape=shape, trial=i))
    # trend: deviation(2T) against deviation(T), median of 5 random coefficient draws
    trend = []
    for j in range(5):
        meds = []
        for T in (50.0, 100.0):
            devs = [perron_truncated(coefficients(60, seed, "unit", stream=5000 + 5 * j + k), 40.5, 0.5, T,
                                     calibration).deviation for k in range(5)]
            meds.append(statistics.median(devs))
        trend.append(meds[1] <= meds[0] + 1e-9)
    rep.diagnostics = {"max_deviation_over_budget": max(ratios, default=0.0),
                       "trend_decreasing": sum(trend), "trend_cases": len(trend)}
    return rep


# --- spi --------------------------------------------------------------------------

def verify_spi(seed: int = 1, trials: int = 100, x_max: int = 10**5, s_max: int = 500,
               store: PrimeStore | None = None) -> SuiteReport:
    rep = SuiteReport("spi", seed)
    rng = random.Random(seed)
    store = _store(x_max, store)
    slack = []
    for i in range(trials):
        x = rng.uniform(100, x_max)
        y = rng.uniform(2, x)
        s = rng.randint(1, s_max)
        e = _unit(rng, s)
        use_rad = bool(i % 2)
        d = spi_discrepancy(store, y, profile(s), e, x, use_radical=use_rad)
        slack.append(abs(d.diff) / d.budget)
        rep.check(d.ok, trial=i, x=x, y=y, s=s, e=e, radical=use_rad, lhs=d.lhs, rhs=d.rhs,
                  budget=d.budget)
    rep.diagnostics = {"max_diff_over_budget": max(slack, default=0.0)}
    return rep


_RUNNERS = {
    "buchstab": verify_buchstab,
    "dispersion": verify_dispersion,
    "orthogonality": verify_orthogonality,
    "large-sieve": verify_large_sieve,
    "perron": verify_perron,
    "spi": verify_spi,
}


def run_verify(suite: str, seed: int = 1) -> list[SuiteReport]:
    """Run one suite, or every suite for ``all``."""
    if suite == "all":
        names = list(SUITES)
    elif suite in _RUNNERS:
        names = [suite]
    else:
        raise KeyError(suite)
    store = build_prime_store(10**5) if {"buchstab", "spi"} & set(names) else None
    out = []
    for name in names:
        t0 = time.perf_counter()
        fn = _RUNNERS[name]
        rep = fn(seed, store=store) if name in ("buchstab", "spi") else fn(seed)
        rep.seconds = time.perf_counter() - t0
        out.append(rep)
    return out
