import csv
import io
import itertools
from fractions import Fraction

import numpy as np
import pytest

from coded_multicast import simulator
from coded_multicast.cli import main
from coded_multicast.model import DemandVector, SystemConfig, zipf_distribution
from coded_multicast.placement import CachePlacement
from coded_multicast.simulator import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    lfu_rate,
    parse_config,
    run_experiment,
    run_trial,
)

SMALL = dict(users=4, files=6, packets=3, alpha=0.5, grasp_iterations=10, trials=3)


def rows(csv_text):
    body = [ln for ln in csv_text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(body))


def test_lfu_rate_full_cache_is_zero():
    config = SystemConfig.homogeneous(3, 4, 2, 4)
    assert lfu_rate(zipf_distribution(4, 0.5, 3), DemandVector((1, 2, 4)), 4, config).rate == 0


def test_lfu_rate_top_request_is_free():
    config = SystemConfig.homogeneous(1, 4, 2, 1)
    assert lfu_rate(zipf_distribution(4, 0.5, 1), DemandVector((1,)), 1, config).rate == 0


def test_lfu_expected_rate_by_enumeration():
    config = SystemConfig.homogeneous(2, 3, 1, 1)
    Q = zipf_distribution(3, 0.0, 2)
    total = sum(Fraction(lfu_rate(Q, DemandVector(d), 1, config).colors) for d in itertools.product((1, 2, 3), repeat=2))
    assert total / 9 == Fraction(10, 9)


def test_zero_cache_gcc_matches_lfu():
    config = ExperimentConfig(**SMALL, cache_sizes=(0.0,), schemes=("gcc", "lfu"))
    for k in range(5):
        t = run_trial(config, 0.0, k)
        assert t.reported["gcc"] == t.reported["lfu"] == t.raw["gcc"].rate
        assert t.raw["lfu"].rate == len(set(t.demand.files))


def test_full_cache_gives_zero():
    config = ExperimentConfig(**SMALL, cache_sizes=(6.0,), schemes=("gcc", "grasp", "lfu"))
    t = run_trial(config, 6.0, 0)
    assert all(v == 0 for v in t.reported.values()) and t.vertices == 0


def test_trial_is_deterministic():
    config = ExperimentConfig(**SMALL, cache_sizes=(2.0,), schemes=("gcc", "grasp", "lfu", "oracle"))
    a, b = run_trial(config, 2.0, 4), run_trial(config, 2.0, 4)
    assert a.raw == b.raw and a.demand == b.demand and a.demand_hash == b.demand_hash


def test_reported_never_above_lfu_or_raw():
    config = ExperimentConfig(**SMALL, cache_sizes=(1.0, 3.0), schemes=("gcc", "grasp", "lfu"))
    for M in config.cache_sizes:
        for k in range(5):
            t = run_trial(config, M, k)
            for s in ("gcc", "grasp"):
                assert t.reported[s] <= min(t.reported["lfu"], t.raw[s].rate)


def test_oracle_is_a_lower_bound_on_heuristics():
    config = ExperimentConfig(users=3, files=4, packets=2, alpha=0.5, cache_sizes=(1.0,),
                              schemes=("gcc", "grasp", "oracle"), trials=1, grasp_iterations=10)
    for k in range(10):
        t = run_trial(config, 1.0, k)
        assert t.raw["oracle"].colors <= min(t.raw["gcc"].colors, t.raw["grasp"].colors)


@pytest.mark.parametrize("fixed", [True, False])
def test_placement_refresh_policy(monkeypatch, fixed):
    seen = []
    original = simulator._place

    def spy(*args):
        seen.append(original(*args).serialize())
        return CachePlacement.parse(seen[-1], 6, 3)

    monkeypatch.setattr(simulator, "_place", spy)
    config = ExperimentConfig(**SMALL, cache_sizes=(2.0,), fix_placement=fixed)
    for k in range(4):
        run_trial(config, 2.0, k)
    assert (len(set(seen)) == 1) == fixed


def test_config_text_gives_base_experiment():
    cfg = parse_config("users=10\nfiles=250\npackets=100\nalpha=0.2\n")
    assert (cfg.users, cfg.files, cfg.packets, cfg.alpha) == (10, 250, 100, 0.2)


def test_flags_override_file():
    cfg = parse_config("grasp_iterations=5\n", {"grasp_iterations": 100})
    assert cfg.grasp_iterations == 100


def test_malformed_real_names_line():
    with pytest.raises(ConfigError, match="line 4: expected real"):
        parse_config("users=10\nfiles=250\npackets=100\nalpha=x\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="line 2: unknown key"):
        parse_config("users=3\ncolour=blue\n")


@pytest.mark.parametrize("bad", [dict(trials=0), dict(cache_sizes=(7.0,)), dict(schemes=("magic",))])
def test_invalid_settings_rejected(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**{**SMALL, **bad})


def test_csv_header_and_rows():
    config = ExperimentConfig(**SMALL, cache_sizes=(0.0, 2.0), schemes=("gcc", "lfu"), no_timestamp=True)
    res = run_experiment(config)
    header = next(ln for ln in res.csv_text.splitlines() if not ln.startswith("#"))
    assert header == ",".join(CSV_COLUMNS)
    got = rows(res.csv_text)
    assert [(r["scheme"], r["M"]) for r in got] == [
        ("gcc", "0"), ("lfu", "0"), ("bound", "0"), ("gcc", "2"), ("lfu", "2"), ("bound", "2")]
    assert all(r["r_ub"] == "" for r in got if r["scheme"] == "lfu")
    assert all(r["r_ub"] != "" for r in got if r["scheme"] in ("gcc", "bound"))
    assert "# users=4" in res.csv_text and "# generated" not in res.csv_text
    assert "\r" not in res.csv_text


def test_single_trial_single_point():
    config = ExperimentConfig(**{**SMALL, "trials": 1}, cache_sizes=(0.0,), schemes=("grasp",), placement="lfu")
    got = rows(run_experiment(config).csv_text)
    assert [r["scheme"] for r in got] == ["grasp"]
    assert got[0]["std_rate"] == "0.000000"


def test_bound_only_skips_trials():
    config = ExperimentConfig(**SMALL, cache_sizes=(1.0, 3.0), bound_only=True)
    res = run_experiment(config)
    assert [r["scheme"] for r in rows(res.csv_text)] == ["bound", "bound"]
    assert res.bounds[1.0].r_ub >= res.bounds[3.0].r_ub


def test_identical_runs_give_identical_csv():
    config = ExperimentConfig(**SMALL, cache_sizes=(1.0, 2.0), no_timestamp=True)
    assert run_experiment(config).csv_text == run_experiment(config).csv_text


def test_timestamp_line_present_by_default():
    config = ExperimentConfig(**{**SMALL, "trials": 1}, cache_sizes=(1.0,), schemes=("lfu",))
    assert "# generated " in run_experiment(config).csv_text


def test_rates_fall_with_cache_size():
    config = ExperimentConfig(users=5, files=10, packets=4, alpha=0.5, cache_sizes=(0.0, 2.0, 5.0, 8.0),
                              trials=20, grasp_iterations=10)
    res = run_experiment(config)
    for scheme in config.schemes:
        pts = [res.point(scheme, M) for M in config.cache_sizes]
        inversions = [(a, b) for a, b in zip(pts, pts[1:]) if b.avg_rate > a.avg_rate]
        assert len(inversions) <= 1
        for a, b in inversions:
            assert b.avg_rate - a.avg_rate <= max(a.std_error, b.std_error)


def test_dimacs_export(tmp_path):
    config = ExperimentConfig(**{**SMALL, "trials": 2}, cache_sizes=(1.5,), schemes=("lfu",),
                              export_dimacs=str(tmp_path))
    run_experiment(config)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["trial_1.5_0.col", "trial_1.5_1.col"]
    text = (tmp_path / names[0]).read_bytes().decode("ascii")
    assert any(ln.startswith("p edge ") for ln in text.splitlines())


def test_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(["--users", "3", "--files", "4", "--packets", "2", "--cache-sizes", "0,1", "--trials", "2",
                 "--grasp-iterations", "5", "--scheme", "gcc", "--scheme", "grasp", "--no-timestamp",
                 "--verify", "--output", str(out)])
    assert code == 0
    got = rows(out.read_text())
    assert {r["scheme"] for r in got} == {"gcc", "grasp", "bound"}


def test_cli_reads_config_and_reports_errors(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("users=2\nfiles=3\npackets=1\ntrials=1\ncache_sizes=1\nscheme=lfu\n")
    assert main(["--config", str(cfg), "--no-timestamp"]) == 0
    assert "lfu,2,3,1" in capsys.readouterr().out
    cfg.write_text("users=2\nalpha=oops\n")
    assert main(["--config", str(cfg)]) == 2
    assert "line 2: expected real" in capsys.readouterr().err
