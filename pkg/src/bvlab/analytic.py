"""Numerical checks of the large sieve inequality and of truncated Perron's formula."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .arith import totient
from .characters import build_character_group, primitive_characters

PERRON_CALIBRATION = 10.0
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class QuadratureError(ArithmeticError):
    pass


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def contour_nodes(c: float, T: float, max_freq: float, nodes_per_panel: int = 8,
                  refine: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-T, T] for integrands like X^(it) / (c + it).

    Panels shrink geometrically towards t = 0, where 1/|c+it| peaks on the scale c,
    and elsewhere are at most half an oscillation period 2*pi/max_freq wide.
    """
    h = min(1.0, math.pi / max(max_freq, 1e-12)) / refine
    inner = min(T, max(4 * c, h))
    edges = [0.0]
    e = c / 64
    while e < inner:
        edges.append(e)
        e *= 2
    edges.append(inner)
    n_uniform = math.ceil((T - inner) / h) if T > inner else 0
    if n_uniform:
        edges.extend(np.linspace(inner, T, n_uniform + 1)[1:].tolist())
    edges = np.array(edges)
    x0, w0 = _gauss_legendre(nodes_per_panel)
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    t = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return np.concatenate([-t[::-1], t]), np.concatenate([w[::-1], w])


def perron_budget_terms(N: float, c: float, T: float, coeffs) -> tuple[float, float, float]:
    """(N^c/T * sum |c_n| n^(-c), C_N (1 + N log N / T), C_N), C_N = max |c_n| on [3N/4, 5N/4].

    ``coeffs`` is indexed from 0 (index 0 ignored).
    """
    mags = np.abs(np.asarray(coeffs))
    n = np.arange(mags.size)
    series = N**c / T * float(np.sum(mags[1:] * n[1:] ** (-c))) if mags.size > 1 else 0.0
    lo, hi = max(math.ceil(3 * N / 4), 1), math.floor(5 * N / 4)
    window = mags[lo : min(hi, mags.size - 1) + 1]
    C_N = float(window.max()) if window.size else 0.0
    return series, C_N * (1 + N * math.log(N) / T), C_N


def perron_budget(N: float, c: float, T: float, coeffs) -> float:
    series, boundary, _ = perron_budget_terms(N, c, T, coeffs)
    return series + boundary


@dataclass
class PerronTrial:
    N: float
    c: float
    T: float
    direct: complex
    contour: complex
    deviation: float
    series_term: float
    boundary_term: float
    C_N: float
    budget: float
    calibration: float
    n_nodes: int

    @property
    def within_budget(self) -> bool:
        return self.deviation <= self.calibration * self.budget

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("direct", "contour"):
            d[k] = [d[k].real, d[k].imag]
        d["within_budget"] = self.within_budget
        return d


def _contour_value(coeffs: np.ndarray, N: float, c: float, T: float, nodes_per_panel: int,
                   refine: float, chunk: int = 4096) -> tuple[complex, int]:
    support = np.flatnonzero(coeffs)
    support = support[support >= 1]
    if support.size == 0:
        return 0j, 0
    logX = math.log(N) - np.log(support.astype(float))
    cn = coeffs[support]
    t, w = contour_nodes(c, T, float(np.max(np.abs(logX))), nodes_per_panel, refine)
    total = 0j
    for i in range(0, t.size, chunk):
        z = c + 1j * t[i : i + chunk]
        vals = np.exp(np.outer(z, logX)) @ cn
        total += np.sum(w[i : i + chunk] * vals / z)
    return complex(total / (2 * np.pi)), int(t.size)


def perron_truncated(coeffs, N: float, c: float, T: float, calibration: float = PERRON_CALIBRATION,
                     nodes_per_panel: int = 8, rtol: float = 1e-9, max_refine: int = 5) -> PerronTrial:
    """Compare sum_{n <= N} c_n with (1/2 pi i) int_{c-iT}^{c+iT} D(z) N^z dz/z.

    The Dirichlet series D is a finite sum.  The integral is refined (panel width
    halved) until two successive values agree to ``rtol``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if N < 2 or T < 2 or c <= 0:
        raise ValueError(f"need N >= 2, T >= 2, c > 0; got N={N}, T={T}, c={c}")
    direct = complex(coeffs[1 : min(math.floor(N), coeffs.size - 1) + 1].sum())
    prev, nodes = _contour_value(coeffs, N, c, T, nodes_per_panel, 1.0)
    refine = 1.0
    for _ in range(max_refine):
        refine *= 2
        cur, nodes = _contour_value(coeffs, N, c, T, nodes_per_panel, refine)
        if abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            break
        prev = cur
    else:
        raise QuadratureError(f"contour integral did not settle with {nodes} nodes")
    series, boundary, C_N = perron_budget_terms(N, c, T, coeffs)
    return PerronTrial(N, c, T, direct, cur, abs(direct - cur), series, boundary, C_N,
                       series + boundary, calibration, nodes)


# --- large sieve ------------------------------------------------------------

@dataclass
class LargeSieveTrial:
    Q: int
    M: int
    N: int
    lhs: float
    rhs: float
    ratio: float

    def holds(self, rel_slack: float = 1e-9) -> bool:
        return self.lhs <= self.rhs * (1 + rel_slack) + 1e-12

    def to_json(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=512)
def _primitive_table(r: int) -> np.ndarray:
    prim = primitive_characters(r)
    return build_character_group(r).table(prim)


def large_sieve_sides(a, Q: int, M: int = 0) -> LargeSieveTrial:
    """Both sides of sum_{q<=Q} q/phi(q) sum*_{chi mod q} |sum_{M<n<=M+N} a_n chi(n)|^2 <= (Q^2+N-1) sum |a_n|^2.

    ``a`` holds a_{M+1}, ..., a_{M+N}.
    """
    a = np.asarray(a, dtype=complex)
    N = a.size
    if Q < 1 or N < 1:
        raise ValueError(f"need Q >= 1 and N >= 1, got Q={Q}, N={N}")
    n = np.arange(M + 1, M + N + 1)
    lhs = 0.0
    for q in range(1, Q + 1):
        table = _primitive_table(q)
        if table.shape[0] == 0:
            continue
        cls = np.zeros(q, dtype=complex)
        np.add.at(cls, n % q, a)
        lhs += q / totient(q) * float(np.sum(np.abs(table @ cls) ** 2))
    rhs = (Q**2 + N - 1) * float(np.sum(np.abs(a) ** 2))
    return LargeSieveTrial(Q, M, N, lhs, rhs, lhs / rhs if rhs > 0 else 0.0)


def append_jsonl(path: str | Path, record: dict) -> None:
    with Path(path).open("a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
