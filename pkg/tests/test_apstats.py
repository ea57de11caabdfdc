from __future__ import annotations

import json
import math
import random
import warnings

import numpy as np
import pytest

from bvlab.apstats import (ENDPOINT, FamilyWarning, ap_error, count_primes_in_ap, exceptional_census,
                           generate_family, li_offset, logarithmic_integral, reference_bounds,
                           read_census_csv, sup_error, write_census_csv, write_census_json)
from bvlab.arith import profile
from bvlab.primes import OutOfRangeError, build_prime_store, count_primes
from oracles import F_dense, F_dense_grid, li_mpmath, trial_division_primes


def test_li_examples():
    assert logarithmic_integral(2) == 0.0
    assert abs(logarithmic_integral(1e6) - 78626.5) <= 0.5
    assert abs(logarithmic_integral(1e6) - li_mpmath(1e6)) <= 1e-12 * li_mpmath(1e6)
    grid = [logarithmic_integral(x) for x in range(2, 1001)]
    assert all(b >= a for a, b in zip(grid, grid[1:]))
    with pytest.raises(ValueError):
        logarithmic_integral(1.5)
    with pytest.raises(ValueError):
        logarithmic_integral(10, rel_tol=1e-3)


@pytest.mark.parametrize("x", [2.5, 3, 10, 100, 1234.5, 1e5, 1e7])
def test_li_paths_agree(x):
    ref = li_mpmath(x)
    assert abs(logarithmic_integral(x, 1e-10) - ref) <= 1e-10 * ref
    assert abs(li_offset(x) - ref) <= 1e-12 * ref


def test_count_primes_in_ap_examples(store_1e5):
    assert count_primes_in_ap(store_1e5, 100, 4, 1) == 11
    assert count_primes_in_ap(store_1e5, 100, 4, 3) == 13
    assert count_primes_in_ap(store_1e5, 100, 1, 0) == 25
    ref = trial_division_primes(100)
    assert sum(1 for p in ref if p % 4 == 1) == 11 and sum(1 for p in ref if p % 4 == 3) == 13
    with pytest.raises(OutOfRangeError):
        count_primes_in_ap(store_1e5, 10**6, 4, 1)


def test_partition_identity(store_1e5):
    rng = random.Random(0)
    for q in range(1, 101):
        for y in (10**5, rng.randrange(2, 10**5)):
            total = sum(count_primes_in_ap(store_1e5, y, q, a) for a in range(q) if math.gcd(a, q) == 1)
            dividing = sum(1 for p in range(2, q + 1) if q % p == 0 and p <= y and all(p % d for d in range(2, p)))
            assert total + dividing == count_primes(store_1e5, y)


def test_sup_error_small_example():
    store = build_prime_store(100)
    rec = sup_error(store, 10, profile(3))
    assert math.gcd(rec.best_residue, 3) == 1
    ref = F_dense(trial_division_primes(100), 10, 3, step=0.01)
    # the grid misses the left limits at jumps only by the Li increment over one step
    assert ref <= rec.value + 0.01 / math.log(2) / 2
    assert rec.value - ref <= 0.01
    assert abs(rec.recompute(store) - rec.value) <= 1e-9


def test_sup_error_modulus_one():
    store = build_prime_store(1000)
    rec = sup_error(store, 1000, 1)
    assert rec.best_residue == 0
    ps = store.primes
    li = li_offset(ps.astype(float))
    cand = np.concatenate([np.abs(np.arange(1, ps.size + 1) - li), np.abs(np.arange(ps.size) - li),
                           [abs(ps.size - li_offset(1000.0))]])
    assert abs(rec.value - cand.max()) <= 1e-12


def test_sup_error_dense_grid_random(store_1e5):
    rng = random.Random(8)
    primes = trial_division_primes(5000)
    for _ in range(8):
        s = rng.randint(1, 200)
        x = rng.uniform(50, 3000)
        rec = sup_error(store_1e5, x, s)
        slack = 0.01 / math.log(2)
        assert F_dense_grid(primes, x, s) <= rec.value + slack
        assert abs(rec.recompute(store_1e5) - rec.value) <= 1e-9
        assert rec.value >= 0 and math.gcd(rec.best_residue, s) == 1


def test_recompute_endpoint():
    store = build_prime_store(200)
    # mod 199 only one class can hold a prime <= 10, so most classes peak at y = x
    rec = sup_error(store, 10.5, 199)
    assert rec.recompute(store) == pytest.approx(rec.value, abs=1e-12)
    rec2 = sup_error(store, 2.0, 7)
    assert rec2.value >= 0
    if rec2.side == ENDPOINT:
        assert rec2.best_point == 2.0


def test_family_examples():
    fam = generate_family(1e6, 1e3, "prime-powers", prime_bound=13)
    assert fam.moduli == [1024, 1331]
    # oracle: exhaustive scan over prime powers in (1000, 2000]
    ref = []
    for p in (2, 3, 5, 7, 11, 13):
        ref += [p**k for k in range(1, 20) if 1000 < p**k <= 2000]
    assert sorted(ref) == fam.moduli
    with pytest.warns(FamilyWarning):
        empty = generate_family(1e6, 1e3, "prime-powers", prime_bound=1)
    assert empty.members == [] and empty.warnings
    rad = generate_family(1e6, 500, "coprime-radical-bounded", radical_bound=2000)
    ms = rad.moduli
    assert ms[0] == 501 and all(math.gcd(a, b) == 1 for i, a in enumerate(ms) for b in ms[i + 1:])
    assert all(500 < m <= 1000 for m in ms)
    explicit = generate_family(1e6, 100, "explicit-list", members=[101, 103, 128])
    assert explicit.moduli == [101, 103, 128]
    with pytest.raises(ValueError):
        generate_family(1e6, 100, "explicit-list", members=[102, 104])


def test_family_default_bounds():
    fam = generate_family(1e8, 1e3, "prime-powers")
    assert fam.prime_bound == pytest.approx(math.log(1e8) ** 6)
    assert len(fam.members) == 140
    rad = generate_family(1e8, 1e3, "coprime-radical-bounded")
    assert rad.radical_bound == pytest.approx(1e8 ** (9 / 40))
    assert all(m.radical <= rad.radical_bound for m in rad.members)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        low = generate_family(1e6, 1e3, "prime-powers", C=4, epsilon=0.9)
    assert any("below" in n for n in low.warnings)


def test_census_properties(store_1e6):
    fam = generate_family(1e6, 1e3, "prime-powers")
    counts = []
    for A in (0, 1, 2, 4, 8, 50):
        rep = exceptional_census(store_1e6, 1e6, fam, A)
        counts.append(rep.counts[0])
        for row in rep.rows:
            rec = sup_error(store_1e6, 1e6, row.s)
            thr = count_primes(store_1e6, 1e6) / (row.phi_s * math.log(1e6) ** A)
            assert row.exceptional == int(rec.value > thr)
            assert row.F_star == rec.value
        assert set(rep.exceptional) <= set(fam.moduli)
    assert counts == sorted(counts)
    assert counts[-1] == len(fam.members)  # A = 50: every F* > 0 is exceptional


def test_census_empty(store_1e5):
    with pytest.warns(FamilyWarning):
        fam = generate_family(1e5, 1e3, "prime-powers", prime_bound=1)
    rep = exceptional_census(store_1e5, 1e5, fam, 1)
    assert rep.counts == (0, 0)
    assert rep.summary()["exceptional"] == 0


def test_reference_bounds_values():
    x, Q, A = 1e8, 1e3, 2.0
    L = math.log(x)
    b = reference_bounds(x, Q, A, 5761455, 3)
    assert b["thm1"] == pytest.approx(L ** 36)
    assert b["thm2"] == pytest.approx(L ** 18)
    assert b["thm3"] == pytest.approx(L ** 38 + L ** 18 * (1 + Q**2 / x**0.5))
    assert b["squared_error_B=A+1"] == pytest.approx(5761455**2 * 3 / (Q**2 * L ** 6))
    assert b["squared_error_B=A+2"] == pytest.approx(5761455**2 * 3 / (Q**2 * L ** 8))


def test_census_files(tmp_path, store_1e6):
    fam = generate_family(1e6, 1e3, "prime-powers")
    rep = exceptional_census(store_1e6, 1e6, fam, 1, workers=2)
    rep1 = exceptional_census(store_1e6, 1e6, fam, 1, workers=1)
    a = write_census_csv(rep, tmp_path / "a.csv")
    b = write_census_csv(rep1, tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    rows = read_census_csv(a)
    assert list(rows[0]) == ["s", "q", "phi_s", "best_a", "best_y", "F_star", "threshold", "exceptional"]
    assert len(rows) == len(fam.members)
    assert [float(r["F_star"]) for r in rows] == [r.F_star for r in rep.rows]
    doc = json.loads(write_census_json(rep, tmp_path / "a.json").read_text())
    assert doc["rows"][0].keys() == rows[0].keys()
    assert doc["summary"]["members"] == len(fam.members)
