import csv
import io
import itertools
import json
import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from gf2load.bench import (
    ConfigError,
    ExperimentConfig,
    derive_trial_seed,
    derive_trial_seeds,
    emit_report,
    report_from_json,
    report_to_csv,
    report_to_json,
    run_baseline_random,
    run_experiment,
    run_expectation,
    run_greedy_cert,
    run_maxload_tail,
    run_nullity,
    run_tail_lemma,
    run_two_sided,
    wilson_interval,
)
from gf2load.bench.cli import main, parse_r_grid
from gf2load.bench.experiments import map_trials

# -- seeding --------------------------------------------------------------------


def test_seed_determinism_and_distinctness():
    assert derive_trial_seed(7, 3) == derive_trial_seed(7, 3)
    assert derive_trial_seed(7, 0) != derive_trial_seed(7, 1)
    assert derive_trial_seed(7, 0) != derive_trial_seed(8, 0)
    assert derive_trial_seed(7, 0, stream=1) != derive_trial_seed(7, 0)


def test_vectorized_seeds_match_scalar():
    v = derive_trial_seeds(123, 50)
    assert [int(x) for x in v] == [derive_trial_seed(123, i) for i in range(50)]


def test_million_seeds_no_collisions():
    seeds = derive_trial_seeds(2024, 1_000_000)
    assert np.unique(seeds).size == 1_000_000


# -- config ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        dict(experiment="nope"),
        dict(experiment="expectation", u=4, l=5),
        dict(experiment="expectation", u=4, l=2, m=17),
        dict(experiment="expectation", trials=0),
        dict(experiment="expectation", set_family="bogus"),
        dict(experiment="expectation", epsilon=1.5),
        dict(experiment="expectation", master_seed=-1),
    ],
)
def test_config_rejects_invalid(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_config_dict_round_trip():
    cfg = ExperimentConfig("two-sided", u=20, l=8, m=500, r_grid=(6.0, 8.0))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


# -- statistics -----------------------------------------------------------------


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0)


# -- experiments at small scale -------------------------------------------------


def small(exp, **kw):
    base = dict(u=16, l=6, m=64, trials=300)
    base.update(kw)
    return ExperimentConfig(exp, **base)


def test_maxload_tail_report_shape():
    rep = run_maxload_tail(small("maxload-tail", r_grid=(0.5, 6, 8)))
    curve = rep.summary["bound_curves"]
    assert [c["r"] for c in curve] == [0.5, 6.0, 8.0]
    assert curve[0]["empirical"] == 1.0  # sanity row, below 1 * opt
    assert rep.checks == {"quadratic_tail": True}
    assert len(rep.per_trial) == 300
    for r in rep.per_trial:
        assert r["ratio"] >= 0
        if r["rank"] == 6:
            assert r["max_load"] >= math.ceil(64 / 64)


def test_surjective_records_respect_pigeonhole():
    rep = run_maxload_tail(small("maxload-tail", m=500, surjective=True))
    assert all(r["rank"] == 6 and r["max_load"] >= math.ceil(500 / 64) for r in rep.per_trial)


def test_expectation_m1_is_exactly_one():
    rep = run_expectation(small("expectation", m=1))
    assert rep.summary["mean"] == 1.0


def test_baseline_mean_within_opt_band():
    rep = run_baseline_random(ExperimentConfig("baseline-random", u=24, l=10, m=1024, trials=500))
    opt_value = rep.summary["opt"]
    assert opt_value <= rep.summary["mean"] <= 4 * opt_value


def test_baseline_large_m_ratio_tends_to_one():
    means = []
    for m in (1 << 14, 1 << 18):
        rep = run_baseline_random(ExperimentConfig("baseline-random", u=24, l=4, m=m, trials=200))
        means.append(rep.summary["mean"] / (m / 16))
    assert means[1] < means[0] and means[1] < 1.05


def test_baseline_n4_m4_matches_multinomial():
    exact = Counter()
    for assign in itertools.product(range(4), repeat=4):
        exact[max(Counter(assign).values())] += 1
    trials = 20_000
    rep = run_baseline_random(ExperimentConfig("baseline-random", u=4, l=2, m=4, trials=trials))
    emp = Counter(r["max_load"] for r in rep.per_trial)
    ks = sorted(exact)
    assert set(emp) == set(ks)
    # one goodness-of-fit test over the 4 outcomes rather than 4 separate 3-sigma checks
    assert chisquare([emp[k] for k in ks], [exact[k] / 256 * trials for k in ks]).pvalue > 0.001


def test_two_sided_sanity_row():
    rep = run_two_sided(small("two-sided", u=8, l=8, m=200, trials=20, surjective=True))
    assert all(r["max_load"] == 1 and r["min_load"] == 0 for r in rep.per_trial)


def test_nullity_census_u_eq_l():
    rep = run_nullity(ExperimentConfig("nullity", u=3, l=3, m=1, trials=2000))
    assert rep.checks["census_matches_formulas"]
    assert rep.summary["pr_not_surjective_exact"] == pytest.approx(1 - (1 / 2) * (3 / 4) * (7 / 8))
    assert sum(int(v) for v in rep.summary["census"].values()) == 512


def test_tail_lemma_block_records():
    rep = run_tail_lemma(ExperimentConfig("tail-lemma", trials=25_000, x0=1.01, t=1.5, k=6))
    assert [r["trials"] for r in rep.per_trial] == [10_000, 10_000, 5_000]
    assert rep.passed


def test_greedy_cert_small():
    rep = run_greedy_cert(ExperimentConfig("greedy-cert", u=12, l=6, m=64, trials=5, set_family="hamming-ball"))
    assert rep.passed and rep.summary["pass_rate"] == 1.0
    assert all(r["certificate"]["chain_valid"] for r in rep.per_trial)


def test_process_pool_preserves_trial_order(monkeypatch):
    import gf2load.bench.experiments as ex

    cfg = small("nullity", trials=300)
    monkeypatch.setattr(ex, "worker_count", lambda: 2)
    assert map_trials(_square_trial, cfg, None) == [i * i for i in range(300)]


def test_worker_cap_from_environment(monkeypatch):
    from gf2load.bench.experiments import worker_count

    monkeypatch.setenv("GF2LOAD_THREADS", "1")
    assert worker_count() == 1


def _square_trial(cfg, payload, i):
    return i * i


# -- reports --------------------------------------------------------------------


def test_report_json_round_trip_and_schema():
    rep = run_maxload_tail(small("maxload-tail", trials=50))
    text = report_to_json(rep)
    data = json.loads(text)
    assert set(data) == {"config", "per_trial", "summary", "versions"}
    assert data["versions"] == {"schema": 1}
    assert {"mean", "stderr", "quantiles", "bound_curves"} <= set(data["summary"])
    back = report_from_json(text)
    assert back == rep
    assert report_to_json(back) == text


def test_floats_have_17_significant_digits():
    rep = run_maxload_tail(small("maxload-tail", trials=20))
    text = report_to_json(rep)
    assert format(rep.summary["opt"], ".17g") in text


def test_csv_rows_equal_trials_plus_header():
    rep = run_greedy_cert(ExperimentConfig("greedy-cert", u=10, l=5, m=32, trials=7))
    rows = list(csv.reader(io.StringIO(report_to_csv(rep))))
    assert len(rows) == 8
    assert "certificate.final_phi" in rows[0]


def test_emit_report_writes_file(tmp_path):
    rep = run_expectation(small("expectation", trials=10))
    path = tmp_path / "r.json"
    text = emit_report(rep, "json", path)
    assert path.read_text() == text
    with pytest.raises(OSError):
        emit_report(rep, "json", tmp_path / "missing" / "r.json")
    with pytest.raises(ValueError):
        emit_report(rep, "xml")


def test_identical_config_gives_identical_bytes():
    for exp in ("maxload-tail", "expectation", "two-sided", "nullity", "greedy-cert", "baseline-random"):
        cfg = small(exp, trials=40, master_seed=99)
        assert report_to_json(run_experiment(cfg)) == report_to_json(run_experiment(cfg))
    cfg = small("maxload-tail", trials=40, master_seed=100)
    assert report_to_json(run_experiment(cfg)) != report_to_json(run_experiment(small("maxload-tail", trials=40, master_seed=99)))


# -- CLI ------------------------------------------------------------------------


def test_parse_r_grid():
    assert parse_r_grid("6:12:1") == (6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0)
    assert parse_r_grid("6,8") == (6.0, 8.0)


def test_cli_success_and_output(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code = main(["expectation", "--u", "12", "--l", "4", "--m", "16", "--trials", "20", "--out", str(out), "--format", "csv"])
    assert code == 0
    assert len(out.read_text().splitlines()) == 21
    code = main(["maxload-tail", "--u", "12", "--l", "4", "--trials", "10", "--r-grid", "6:8:1"])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert [c["r"] for c in data["summary"]["bound_curves"]] == [6.0, 7.0, 8.0]


def test_cli_config_errors(capsys):
    assert main(["expectation", "--u", "4", "--l", "6"]) == 2
    with pytest.raises(SystemExit) as e:
        main(["not-an-experiment"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["expectation", "--r-grid", "x:y"])
    assert e.value.code == 2
    assert main(["expectation", "--u", "8", "--l", "4", "--m", "8", "--trials", "2", "--out", "/nonexistent/dir/x.json"]) == 2


@pytest.mark.filterwarnings("ignore::gf2load.potential.CertificateWeakenedWarning")
def test_cli_check_exit_codes(capsys):
    assert main(["tail-lemma", "--trials", "20000", "--x0", "1.01", "--t", "1.5", "--k", "6", "--check"]) == 0
    # greedy with a single random candidate and no scan cannot certify every hash
    code = main(
        ["greedy-cert", "--u", "30", "--l", "6", "--m", "64", "--family", "subspace-slice", "--trials", "30",
         "--candidates", "1", "--exhaustive-threshold", "0", "--check"]
    )
    assert code == 3
    assert "FAIL" in capsys.readouterr().err
