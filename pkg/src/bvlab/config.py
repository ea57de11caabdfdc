"""Experiment configuration: a flat ``key = value`` file plus command-line overrides."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .apstats import (DEFAULT_C, RADICAL_EXPONENT, CensusReport, FamilyWarning, exceptional_census,
                      generate_family, write_census_csv, write_census_json)
from .primes import PrimeStore, load_or_build

CACHE_ENV = "BVLAB_CACHE"
DEFAULT_CACHE = Path.home() / ".cache" / "bvlab" / "primes.bvpc"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    x: float = 1e6
    Q: float = 1e3
    A_grid: tuple[float, ...] = (0.0, 1.0, 2.0)
    epsilon: float = 0.1
    kind: str = "prime-powers"
    C: float = DEFAULT_C
    prime_bound: float | None = None
    radical_bound: float | None = None
    radical_exponent: float = RADICAL_EXPONENT
    members: tuple[int, ...] = ()
    alpha: float = 1 / 3
    beta: float = 1 / 3
    M: float | None = None
    seed: int = 1
    output_dir: str = "bvlab_out"
    cache_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.x < 3:
            raise ConfigError(f"x must be at least 3, got {self.x}")
        if self.Q <= 0:
            raise ConfigError(f"Q must be positive, got {self.Q}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.M is None:
            self.M = 2 * math.sqrt(self.x) + 1

    def regime(self) -> list[dict]:
        """Where Q sits relative to x^eps and x^(1/3) L^(-15-2A), per grid point."""
        L = math.log(self.x)
        lower = self.x**self.epsilon
        out = []
        for A in self.A_grid:
            upper = self.x ** (1 / 3) * L ** (-15 - 2 * A)
            out.append({"A": A, "lower": lower, "upper": upper,
                        "Q_in_eps_third": lower <= self.Q <= self.x ** (1 / 3),
                        "in_regime": lower <= self.Q <= upper})
        return out

    def public(self) -> dict:
        """Fields that determine results (paths and parallelism excluded)."""
        d = dataclasses.asdict(self)
        for k in ("output_dir", "cache_path", "workers"):
            d.pop(k)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_ALIASES = {"a": "A_grid", "a_grid": "A_grid", "q": "Q", "family": "kind", "out": "output_dir",
            "cache": "cache_path", "jobs": "workers", "m": "M"}


def _number(text: str) -> float:
    text = text.strip().replace("^", "**")
    if "**" in text:
        base, exp = text.split("**", 1)
        return _number(base) ** _number(exp)
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _coerce(name: str, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if name == "A_grid":
        return tuple(_number(t) for t in raw.split(",") if t.strip())
    if name == "members":
        return tuple(int(_number(t)) for t in raw.split(",") if t.strip())
    if name in ("kind", "output_dir"):
        return raw
    if name == "cache_path":
        return raw or None
    if name in ("seed", "workers"):
        v = _number(raw)
        if v != int(v):
            raise ConfigError(f"{name} must be an integer, got {raw!r}")
        return int(v)
    if raw.lower() in ("", "none", "default"):
        if _FIELDS[name].default is not None and name != "M":
            raise ConfigError(f"{name} needs a value")
        return None
    return _number(raw)


def _canonical(key: str) -> str:
    k = key.strip().replace("-", "_")
    if k in _FIELDS:
        return k
    k = _ALIASES.get(k.lower(), k)
    if k not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    return k


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[_canonical(k)] = v.strip()
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    values: dict = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[_canonical(k)] = v
    kwargs = {k: _coerce(k, v) for k, v in values.items()}
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_cache_path(explicit: str | None = None, configured: str | None = None) -> Path:
    """An explicit path wins, then $BVLAB_CACHE, then the config value, then the default."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    if configured:
        return Path(configured)
    return DEFAULT_CACHE


# --- census driver ------------------------------------------------------------

SUMMARY_FIELDS = ("kind", "x", "Q", "A", "members", "exceptional", "card_Q", "discarded_radicals",
                  "in_regime", "bound_thm1", "ratio_thm1", "bound_thm2", "ratio_thm2",
                  "bound_thm3", "ratio_thm3")


def census_stem(kind: str, A: float) -> str:
    return f"census_{kind}_A{A:g}"


@dataclass
class CensusRun:
    config: ExperimentConfig
    reports: list[CensusReport] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    summary_rows: list[dict] = field(default_factory=list)


def run_census(cfg: ExperimentConfig, store: PrimeStore | None = None,
               cache_path: str | Path | None = None) -> CensusRun:
    """One CSV and JSON per grid point, plus summary.csv / summary.json in cfg.output_dir.

    If anything fails midway, the files written so far stay and a PARTIAL marker
    names the error.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "PARTIAL"
    marker.write_text("census in progress\n")
    run = CensusRun(cfg)
    try:
        if store is None:
            path = cache_path if cache_path is not None else resolve_cache_path(None, cfg.cache_path)
            store = load_or_build(math.ceil(cfg.x), path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FamilyWarning)
            fam = generate_family(cfg.x, cfg.Q, cfg.kind, prime_bound=cfg.prime_bound, C=cfg.C,
                                  radical_bound=cfg.radical_bound,
                                  radical_exponent=cfg.radical_exponent,
                                  epsilon=cfg.epsilon, members=list(cfg.members))
        records: dict = {}
        regime = {r["A"]: r for r in cfg.regime()}
        for A in cfg.A_grid:
            rep = exceptional_census(store, cfg.x, fam, A, workers=cfg.workers, records=records)
            stem = census_stem(cfg.kind, A)
            run.files.append(write_census_csv(rep, out / f"{stem}.csv"))
            run.files.append(write_census_json(rep, out / f"{stem}.json"))
            row = rep.summary()
            row["in_regime"] = regime[A]["in_regime"]
            run.reports.append(rep)
            run.summary_rows.append(row)
        _write_summary(run, out)
    except BaseException as exc:
        marker.write_text(f"census incomplete: {type(exc).__name__}: {exc}\n"
                          + "".join(f"{p.name}\n" for p in run.files))
        raise
    marker.unlink()
    return run


def _write_summary(run: CensusRun, out: Path) -> None:
    import csv

    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in run.summary_rows:
            w.writerow(["" if row.get(k) is None else (repr(row[k]) if isinstance(row[k], float) else row[k])
                        for k in SUMMARY_FIELDS])
    doc = {"config": run.config.public(), "regime": run.config.regime(), "rows": run.summary_rows,
           "warnings": sorted({w for r in run.reports for w in r.warnings})}
    run.files.append(out / "summary.csv")
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    run.files.append(out / "summary.json")


def format_summary(rows: list[dict]) -> str:
    head = f"{'kind':<24}{'A':>5}{'members':>9}{'exc':>6}{'|Q|':>6}  {'ratio_thm2':>12}{'ratio_thm3':>12}"
    lines = [head]
    for r in rows:
        lines.append(f"{r['kind']:<24}{r['A']:>5g}{r['members']:>9}{r['exceptional']:>6}{r['card_Q']:>6}"
                     f"  {_g(r.get('ratio_thm2')):>12}{_g(r.get('ratio_thm3')):>12}")
    return "\n".join(lines)


def _g(v) -> str:
    return "-" if v is None else f"{v:.3e}"
