from __future__ import annotations

import json
import math
import statistics

import mpmath
import numpy as np
import pytest

from bvlab.analytic import (QuadratureError, append_jsonl, contour_nodes, large_sieve_sides,
                            perron_budget, perron_truncated)
from bvlab.bilinear import coefficients


def _contour_closed_form(coeffs, N, c, T):
    """(1/2 pi i) ∫ sum c_n (N/n)^z dz/z via antiderivatives Ei(uz) (u > 0) or -E1(-uz) (u < 0)."""
    za, zb = mpmath.mpc(c, -T), mpmath.mpc(c, T)
    total = mpmath.mpc(0)
    for n, cn in enumerate(coeffs):
        if n == 0 or cn == 0:
            continue
        u = mpmath.log(mpmath.mpf(N) / n)
        if u > 0:
            I = mpmath.ei(u * zb) - mpmath.ei(u * za)
        else:
            I = -mpmath.e1(-u * zb) + mpmath.e1(-u * za)
        total += complex(cn) * I
    return complex(total / (2j * mpmath.pi))


def test_perron_single_term():
    c1 = np.array([0, 1], dtype=complex)
    tr = perron_truncated(c1, 2.5, 0.5, 100)
    assert tr.direct == 1
    assert tr.deviation <= tr.budget
    ref = _contour_closed_form(c1, 2.5, 0.5, 100)
    assert abs(tr.contour - ref) <= 1e-8


def test_perron_random_against_closed_form():
    for k in range(5):
        co = coefficients(30, 5, "unit", stream=k)
        N, c, T = 12.5 + k * 3.1, 0.3 + 0.2 * k, 40 + 25 * k
        tr = perron_truncated(co, N, c, T)
        assert abs(tr.contour - _contour_closed_form(co, N, c, T)) <= 1e-8 * (1 + abs(tr.contour))
        assert abs(tr.direct - co[1 : math.floor(N) + 1].sum()) <= 1e-12


def test_perron_zero():
    tr = perron_truncated(np.zeros(10), 5.5, 1.0, 10)
    assert tr.direct == 0 and tr.contour == 0 and tr.deviation == 0


def test_perron_log_shape():
    L = 20
    c = np.ones(L + 1)
    c[0] = 0
    tr = perron_truncated(c, 10.5, 1 / math.log(L), L * math.log(L))
    assert tr.direct == 10
    assert tr.within_budget and tr.deviation <= tr.budget
    assert abs(tr.contour - _contour_closed_form(c, 10.5, 1 / math.log(L), L * math.log(L))) <= 1e-7


def test_perron_budget_terms():
    c = np.zeros(11)
    c[1:] = 0.5
    c[8] = 2.0
    N, cc, T = 8.3, 0.7, 30
    series = N**cc / T * sum(abs(c[n]) * n**-cc for n in range(1, 11))
    CN = max(abs(c[n]) for n in range(1, 11) if 3 * N / 4 <= n <= 5 * N / 4)
    assert perron_budget(N, cc, T, c) == pytest.approx(series + CN * (1 + N * math.log(N) / T))


def test_perron_domain():
    with pytest.raises(ValueError):
        perron_truncated(np.ones(5), 3.5, 0.5, 1.0)
    with pytest.raises(QuadratureError):
        perron_truncated(coefficients(50, 1), 20.5, 0.5, 100, rtol=1e-30, max_refine=1)


def test_perron_trend():
    devs = {}
    for T in (50.0, 100.0, 200.0):
        devs[T] = statistics.median(perron_truncated(coefficients(40, 2, stream=k), 30.5, 0.5, T).deviation
                                    for k in range(5))
    assert devs[200.0] <= devs[50.0] + 1e-9


def test_contour_nodes_integrate_exactly():
    t, w = contour_nodes(0.1, 50, 3.0)
    assert np.all(np.diff(t) > 0) and t[0] > -50 and t[-1] < 50
    assert w.sum() == pytest.approx(100, rel=1e-12)
    # ∫ dt / (c^2 + t^2) = (2/c) atan(T/c)
    assert np.sum(w / (0.01 + t**2)) == pytest.approx(2 / 0.1 * math.atan(500), rel=1e-10)


def test_large_sieve_examples():
    for N in (1, 10, 50, 200):
        tr = large_sieve_sides(np.ones(N), 1)
        assert tr.lhs == tr.rhs == N * N and tr.ratio == 1
    z = large_sieve_sides(np.zeros(10), 4)
    assert (z.lhs, z.rhs, z.ratio) == (0, 0, 0)
    rng = np.random.default_rng(0)
    tr = large_sieve_sides(np.exp(2j * np.pi * rng.random(50)), 10)
    assert tr.rhs == pytest.approx(149 * 50)
    assert 0 <= tr.ratio <= 1 and tr.holds()


def test_large_sieve_direct_lhs():
    # independent lhs: primitive characters mod q from the full group by conductor
    from bvlab.characters import build_character_group

    rng = np.random.default_rng(3)
    a = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    M, Q = 17, 9
    lhs = 0.0
    for q in range(1, Q + 1):
        G = build_character_group(q)
        phi = len(list(G))
        for chi in G:
            if chi.conductor != q:
                continue
            s = sum(a[i] * chi(M + 1 + i) for i in range(40))
            lhs += q / phi * abs(s) ** 2
    assert large_sieve_sides(a, Q, M).lhs == pytest.approx(lhs, rel=1e-12)


def test_large_sieve_random_and_rotation():
    rng = np.random.default_rng(4)
    for _ in range(200):
        Q, N, M = int(rng.integers(1, 31)), int(rng.integers(1, 201)), int(rng.integers(0, 500))
        a = np.exp(2j * np.pi * rng.random(N)) * rng.random(N)
        tr = large_sieve_sides(a, Q, M)
        assert tr.holds() and tr.lhs >= 0
        rot = large_sieve_sides(a * np.exp(0.7j), Q, M)
        assert rot.lhs == pytest.approx(tr.lhs, rel=1e-10)
    with pytest.raises(ValueError):
        large_sieve_sides(np.ones(3), 0)


def test_jsonl(tmp_path):
    path = tmp_path / "t.jsonl"
    tr = perron_truncated(np.array([0, 1, 1]), 2.5, 0.5, 10)
    append_jsonl(path, tr.to_json())
    append_jsonl(path, large_sieve_sides(np.ones(4), 2).to_json())
    lines = [json.loads(s) for s in path.read_text().splitlines()]
    assert len(lines) == 2 and lines[0]["within_budget"] is True and lines[1]["N"] == 4
