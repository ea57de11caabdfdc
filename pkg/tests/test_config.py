from __future__ import annotations

import json
import math

import pytest

from bvlab.config import (ConfigError, ExperimentConfig, load_config, parse_config_text,
                          resolve_cache_path, run_census)
from bvlab.primes import build_prime_store


def test_parse_and_overrides(tmp_path):
    path = tmp_path / "exp.conf"
    path.write_text("# census\nx = 10^6\nQ = 1e3\nA = 0, 1, 2\nradical-exponent = 9/40\nseed=7\n")
    cfg = load_config(path, {"workers": "2", "Q": None})
    assert cfg.x == 1e6 and cfg.Q == 1e3 and cfg.A_grid == (0.0, 1.0, 2.0)
    assert cfg.radical_exponent == 9 / 40 and cfg.seed == 7 and cfg.workers == 2
    assert cfg.M == 2 * 1000 + 1
    cfg = load_config(path, {"x": "2e6"})
    assert cfg.x == 2e6


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config_text("nonsense line")
    with pytest.raises(ConfigError):
        parse_config_text("colour = blue")
    with pytest.raises(ConfigError):
        load_config(None, {"epsilon": "0"})
    with pytest.raises(ConfigError):
        load_config(None, {"seed": "1.5"})
    with pytest.raises(ConfigError):
        load_config(None, {"x": "ten"})


def test_regime_flags():
    cfg = ExperimentConfig(x=1e8, Q=1e3, A_grid=(0, 2), epsilon=0.1)
    reg = cfg.regime()
    L = math.log(1e8)
    assert reg[0]["upper"] == pytest.approx(1e8 ** (1 / 3) * L**-15)
    assert reg[0]["Q_in_eps_third"] is False  # 10^3 > x^(1/3) = 464
    assert reg[0]["in_regime"] is False
    assert ExperimentConfig(x=1e12, Q=1e3).regime()[0]["Q_in_eps_third"] is True


def test_cache_path_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv("BVLAB_CACHE", raising=False)
    assert resolve_cache_path(None, "conf.bvpc").name == "conf.bvpc"
    monkeypatch.setenv("BVLAB_CACHE", str(tmp_path / "env.bvpc"))
    assert resolve_cache_path(None, "conf.bvpc") == tmp_path / "env.bvpc"
    assert resolve_cache_path("flag.bvpc", "conf.bvpc").name == "flag.bvpc"


@pytest.fixture(scope="module")
def store():
    return build_prime_store(10**6)


def test_run_census(tmp_path, store):
    cfg = ExperimentConfig(x=1e6, Q=1e3, A_grid=(0, 1, 2), output_dir=str(tmp_path / "a"))
    run = run_census(cfg, store=store)
    names = sorted(p.name for p in run.files)
    assert "census_prime-powers_A0.csv" in names and "summary.json" in names
    assert len(run.reports) == 3
    counts = [r.counts[0] for r in run.reports]
    assert counts == sorted(counts)
    assert not (tmp_path / "a" / "PARTIAL").exists()
    doc = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert [r["A"] for r in doc["rows"]] == [0, 1, 2]
    # rerun, different parallelism: byte-identical outputs
    cfg2 = ExperimentConfig(x=1e6, Q=1e3, A_grid=(0, 1, 2), output_dir=str(tmp_path / "b"), workers=2)
    run_census(cfg2, store=store)
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_run_census_empty_family(tmp_path, store):
    cfg = ExperimentConfig(x=1e6, Q=1e3, A_grid=(1,), prime_bound=1, output_dir=str(tmp_path))
    run = run_census(cfg, store=store)
    row = run.summary_rows[0]
    assert row["members"] == 0 and row["exceptional"] == 0
    assert json.loads((tmp_path / "summary.json").read_text())["warnings"]


def test_run_census_partial(tmp_path):
    cfg = ExperimentConfig(x=1e6, Q=1e3, A_grid=(1,), output_dir=str(tmp_path))
    small = build_prime_store(1000)  # cannot cover x
    with pytest.raises(Exception):
        run_census(cfg, store=small)
    assert "incomplete" in (tmp_path / "PARTIAL").read_text()
