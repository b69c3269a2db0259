"""Experiments reproducing the max-load, tail and construction claims at desk scale.

Every experiment is a pure function of its :class:`ExperimentConfig`
(including ``master_seed``): trial ``i`` draws from its own generator
seeded by :func:`derive_trial_seed`, and results are assembled in trial
order regardless of how many workers ran them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ..linhash import sample_surjective_chain, sample_uniform
from ..loadmodel import (
    FAMILIES,
    BallSet,
    exact_rank_census,
    load_histogram,
    make_ball_set,
    opt,
    random_function_loads,
)
from ..potential import MonotonicityTally, greedy_construct
from ..tailmodel import simulate_tight_logs, tail_bound, tail_event_log
from .seeding import STREAM_BALLS, STREAM_BASELINE, derive_trial_seed, trial_rng

EXPERIMENTS = (
    "maxload-tail",
    "expectation",
    "two-sided",
    "nullity",
    "tail-lemma",
    "greedy-cert",
    "baseline-random",
)
SCHEMA_VERSION = 1
TAIL_BLOCK = 10_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    u: int = 24
    l: int = 10
    m: int = 1024
    set_family: str = "random-distinct"
    trials: int = 1000
    master_seed: int = 0
    r_grid: tuple[float, ...] = (6, 7, 8, 9, 10, 11, 12)
    epsilon: float = 0.1
    surjective: bool = False
    base: float | None = None
    candidates: int = 32
    exhaustive_threshold: int = 1 << 20
    # tail-lemma only
    x0: float = 1.001
    t: float = 1.01
    k: int = 10

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not 1 <= self.l <= self.u:
            raise ConfigError(f"need 1 <= l <= u (l={self.l}, u={self.u})")
        if self.u > 64:
            raise ConfigError("experiments support u <= 64")
        if self.l > 20:
            raise ConfigError("experiments support l <= 20")
        if self.m < 0 or self.m > (1 << self.u):
            raise ConfigError(f"m={self.m} does not fit in F2^{self.u}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.set_family not in FAMILIES:
            raise ConfigError(f"unknown family {self.set_family!r}; choose from {FAMILIES}")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must be in (0, 1)")
        if not 0 <= self.master_seed < (1 << 64):
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.candidates < 1:
            raise ConfigError("candidates must be >= 1")

    @property
    def n(self) -> int:
        return 1 << self.l

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r_grid"] = [float(r) for r in self.r_grid]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "r_grid" in d:
            d["r_grid"] = tuple(d["r_grid"])
        return cls(**d)


@dataclass
class Report:
    config: dict
    per_trial: list[dict]
    summary: dict
    versions: dict = field(default_factory=lambda: {"schema": SCHEMA_VERSION})

    @property
    def checks(self) -> dict[str, bool]:
        return self.summary.get("checks", {})

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_trial": self.per_trial,
            "summary": self.summary,
            "versions": self.versions,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(d["config"], d["per_trial"], d["summary"], d["versions"])


# -- statistics ---------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 3.0) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def _summary_stats(x: np.ndarray) -> dict:
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = float(x.mean())
    stderr = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    qs = {f"q{int(q * 1000):03d}": float(np.quantile(x, q)) for q in (0.5, 0.9, 0.99)}
    qs["max"] = float(x.max())
    qs["min"] = float(x.min())
    return {"n": n, "mean": mean, "stderr": stderr, "quantiles": qs}


def quadratic_tail_bound(r: float) -> float:
    return min(1.0, 49.0 / (r - 2.0) ** 2) if r > 2 else 1.0


def surjective_tail_bound(r: float) -> float:
    """3 log2(e) / (2 (r - 1)); stated for m = n and the log n / log log n scale."""
    return min(1.0, 3 * math.log2(math.e) / (2 * (r - 1))) if r > 1 else 1.0


def survival_curve(loads: np.ndarray, opt_value: float, r_grid) -> list[dict]:
    loads = np.asarray(loads)
    n = loads.size
    out = []
    for r in r_grid:
        r = float(r)
        k = int(np.count_nonzero(loads >= r * opt_value))
        lo, hi = wilson_interval(k, n)
        qb = quadratic_tail_bound(r)
        out.append(
            {
                "r": r,
                "threshold": r * opt_value,
                "empirical": k / n,
                "wilson3_lo": lo,
                "wilson3_hi": hi,
                "bound_quadratic": qb,
                "bound_surjective": surjective_tail_bound(r),
                "within_quadratic": lo <= qb,
            }
        )
    return out


# -- trial execution ----------------------------------------------------------


def worker_count() -> int:
    cap = os.environ.get("GF2LOAD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _run_chunk(args):
    fn, cfg, payload, lo, hi = args
    return [fn(cfg, payload, i) for i in range(lo, hi)]


def map_trials(fn: Callable, cfg: ExperimentConfig, payload, n: int | None = None) -> list:
    """[fn(cfg, payload, i) for i in range(n)], fanned out over worker processes."""
    n = cfg.trials if n is None else n
    workers = worker_count()
    if workers <= 1 or n < 256:
        return [fn(cfg, payload, i) for i in range(n)]
    size = max(1, math.ceil(n / (4 * workers)))
    chunks = [(fn, cfg, payload, lo, min(n, lo + size)) for lo in range(0, n, size)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_run_chunk, chunks))
    return [r for part in parts for r in part]


def experiment_ball_set(cfg: ExperimentConfig) -> BallSet:
    """The fixed ball set of an experiment, drawn from its own seed stream."""
    return make_ball_set(cfg.set_family, cfg.u, cfg.m, trial_rng(cfg.master_seed, 0, STREAM_BALLS))


def _load_trial(cfg: ExperimentConfig, payload, i: int) -> dict:
    S, balls, opt_value = payload
    seed = derive_trial_seed(cfg.master_seed, i)
    rng = np.random.default_rng(seed)
    if cfg.surjective:
        h = sample_surjective_chain(rng, cfg.u, cfg.l)
    else:
        h = sample_uniform(rng, cfg.u, cfg.l)
    hist = load_histogram(S, h, balls)
    return {
        "trial_index": i,
        "derived_seed": seed,
        "max_load": hist.max_load,
        "min_load": hist.min_load,
        "opt_value": opt_value,
        "ratio": hist.max_load / opt_value,
        "rank": h.rank,
        "bins_occupied": hist.bins_occupied,
    }


def _baseline_trial(cfg: ExperimentConfig, payload, i: int) -> dict:
    opt_value = payload
    seed = derive_trial_seed(cfg.master_seed, i, STREAM_BASELINE)
    occ = random_function_loads(np.random.default_rng(seed), cfg.m, cfg.n)
    mx = int(occ.max()) if cfg.m else 0
    return {
        "trial_index": i,
        "derived_seed": seed,
        "max_load": mx,
        "min_load": int(occ.min()),
        "opt_value": opt_value,
        "ratio": mx / opt_value,
        "bins_occupied": int(np.count_nonzero(occ)),
    }


def _load_records(cfg: ExperimentConfig) -> list[dict]:
    S = experiment_ball_set(cfg)
    opt_value = opt(max(cfg.m, 1), cfg.n)
    return map_trials(_load_trial, cfg, (S, S.as_array(), opt_value))


def _small_u_flag(cfg: ExperimentConfig) -> bool:
    """u below the l + 2 log2(l m) regime of the surjective tail bound."""
    return cfg.u < cfg.l + 2 * math.log2(max(2, cfg.l * cfg.m))


# -- experiments --------------------------------------------------------------


def run_maxload_tail(cfg: ExperimentConfig) -> Report:
    recs = _load_records(cfg)
    loads = np.array([r["max_load"] for r in recs])
    opt_value = opt(max(cfg.m, 1), cfg.n)
    curve = survival_curve(loads, opt_value, cfg.r_grid)
    summary = _summary_stats(loads)
    summary.update(
        opt=opt_value,
        bound_curves=curve,
        small_u_regime=_small_u_flag(cfg),
        checks={"quadratic_tail": all(c["within_quadratic"] for c in curve if c["r"] >= 6)},
    )
    return Report(cfg.to_dict(), recs, summary)


def run_baseline_random(cfg: ExperimentConfig) -> Report:
    opt_value = opt(max(cfg.m, 1), cfg.n)
    recs = map_trials(_baseline_trial, cfg, opt_value)
    loads = np.array([r["max_load"] for r in recs])
    summary = _summary_stats(loads)
    summary.update(
        opt=opt_value,
        ratio=summary["mean"] / opt_value,
        bound_curves=survival_curve(loads, opt_value, cfg.r_grid),
        checks={},
    )
    return Report(cfg.to_dict(), recs, summary)


def run_expectation(cfg: ExperimentConfig) -> Report:
    recs = _load_records(cfg)
    loads = np.array([r["max_load"] for r in recs])
    opt_value = opt(max(cfg.m, 1), cfg.n)
    base = map_trials(_baseline_trial, cfg, opt_value)
    base_loads = np.array([r["max_load"] for r in base])
    summary = _summary_stats(loads)
    ratio = summary["mean"] / opt_value
    base_mean = float(base_loads.mean())
    summary.update(
        opt=opt_value,
        ratio=ratio,
        baseline_mean=base_mean,
        baseline_stderr=_summary_stats(base_loads)["stderr"],
        linear_over_random=summary["mean"] / base_mean if base_mean else 1.0,
        bound_curves=survival_curve(loads, opt_value, cfg.r_grid),
        checks={
            "ratio_at_most_16": ratio <= 16,
            "linear_within_25pct_of_random": summary["mean"] <= 1.25 * base_mean,
        },
    )
    return Report(cfg.to_dict(), recs, summary)


def run_two_sided(cfg: ExperimentConfig) -> Report:
    recs = _load_records(cfg)
    scale = cfg.n / cfg.m if cfg.m else 0.0
    for r in recs:
        r["min_norm"] = r["min_load"] * scale
        r["max_norm"] = r["max_load"] * scale
        r["empty_bin"] = r["bins_occupied"] < cfg.n
    mins = np.array([r["min_norm"] for r in recs])
    maxs = np.array([r["max_norm"] for r in recs])
    eps = cfg.epsilon
    c1 = float(np.quantile(mins, eps / 2))
    c2 = float(np.quantile(maxs, 1 - eps / 2))
    empty = float(np.mean([r["empty_bin"] for r in recs]))
    summary = _summary_stats(np.array([r["max_load"] for r in recs]))
    summary.update(
        C1_hat=c1,
        C2_hat=c2,
        empty_bin_fraction=empty,
        m_over_n_log_n=cfg.m / (cfg.n * cfg.l),
        min_norm=_summary_stats(mins),
        max_norm=_summary_stats(maxs),
        bound_curves=[],
        checks={"empty_bin_fraction_below_1pct": empty < 0.01, "C1_hat_positive": c1 > 0, "C2_hat_below_3": c2 < 3},
    )
    return Report(cfg.to_dict(), recs, summary)


def _nullity_trial(cfg: ExperimentConfig, payload, i: int) -> dict:
    seed = derive_trial_seed(cfg.master_seed, i)
    h = sample_uniform(np.random.default_rng(seed), cfg.u, cfg.l)
    k = cfg.u - h.rank
    return {"trial_index": i, "derived_seed": seed, "rank": h.rank, "nullity": k, "pow2_nullity": 1 << k}


def exact_not_surjective(u: int, l: int) -> Fraction:
    """1 - prod_{i<l} (1 - 2^(i-u))."""
    p = Fraction(1)
    for i in range(l):
        p *= 1 - Fraction(1 << i, 1 << u)
    return 1 - p


def exact_mean_pow2_nullity(u: int, l: int) -> Fraction:
    """E[2^nullity] = 1 + 2^-l (2^u - 1)."""
    return 1 + Fraction((1 << u) - 1, 1 << l)


def run_nullity(cfg: ExperimentConfig) -> Report:
    recs = map_trials(_nullity_trial, cfg, None)
    k = cfg.u - cfg.l
    n = len(recs)
    not_surj = sum(r["rank"] < cfg.l for r in recs)
    pw = np.array([r["pow2_nullity"] for r in recs], dtype=float)
    pw_stats = _summary_stats(pw)
    p_hat = not_surj / n
    sigma_p = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / n) / n)
    markov = 2.0**-k
    mean_bound = 2.0**k + 1
    summary = _summary_stats(np.array([r["nullity"] for r in recs], dtype=float))
    summary.update(
        pr_not_surjective=p_hat,
        pr_not_surjective_exact=float(exact_not_surjective(cfg.u, cfg.l)),
        pr_not_surjective_bound=markov,
        mean_pow2_nullity=pw_stats["mean"],
        mean_pow2_nullity_stderr=pw_stats["stderr"],
        mean_pow2_nullity_exact=float(exact_mean_pow2_nullity(cfg.u, cfg.l)),
        mean_pow2_nullity_bound=mean_bound,
        bound_curves=[],
    )
    checks = {
        "not_surjective_within_markov": p_hat <= markov + 3 * sigma_p,
        "mean_pow2_nullity_within_bound": pw_stats["mean"] <= mean_bound + 3 * pw_stats["stderr"],
    }
    if cfg.u * cfg.l <= 12:
        census = exact_rank_census(cfg.u, cfg.l)
        total = sum(census.values())
        full = census.get(cfg.l, 0)
        census_p = Fraction(total - full, total)
        census_mean = Fraction(sum(c << (cfg.u - r) for r, c in census.items()), total)
        summary["census"] = {str(r): c for r, c in census.items()}
        checks["census_matches_formulas"] = (
            census_p == exact_not_surjective(cfg.u, cfg.l)
            and census_mean == exact_mean_pow2_nullity(cfg.u, cfg.l)
            and full == _full_rank_count(cfg.u, cfg.l)
        )
    summary["checks"] = checks
    return Report(cfg.to_dict(), recs, summary)


def _full_rank_count(u: int, l: int) -> int:
    out = 1
    for i in range(l):
        out *= (1 << u) - (1 << i)
    return out


def _tail_block(cfg: ExperimentConfig, payload, i: int) -> dict:
    size = min(TAIL_BLOCK, cfg.trials - i * TAIL_BLOCK)
    seed = derive_trial_seed(cfg.master_seed, i)
    logs = simulate_tight_logs("basic", np.random.default_rng(seed), cfg.x0, cfg.t, 0.0, cfg.k, size)
    hits = int(np.count_nonzero(tail_event_log(logs[:, -1], cfg.t, cfg.k)))
    return {"trial_index": i, "derived_seed": seed, "trials": size, "tail_hits": hits}


def run_tail_lemma(cfg: ExperimentConfig) -> Report:
    """Basic tight sequence; trials are simulated in seeded blocks of TAIL_BLOCK."""
    blocks = math.ceil(cfg.trials / TAIL_BLOCK)
    recs = map_trials(_tail_block, cfg, None, blocks)
    hits = sum(r["tail_hits"] for r in recs)
    n = cfg.trials
    p_hat = hits / n
    bound = tail_bound("basic", cfg.x0, cfg.t, cfg.k)
    sigma = math.sqrt(bound * (1 - bound) / n)
    summary = {
        "n": n,
        "mean": p_hat,
        "stderr": math.sqrt(p_hat * (1 - p_hat) / n),
        "quantiles": {},
        "tail_frequency": p_hat,
        "bound_basic": bound,
        "sigma": sigma,
        "z_score": (p_hat - bound) / sigma if sigma else 0.0,
        "bound_curves": [],
        "checks": {"tight_within_3_sigma": abs(p_hat - bound) <= 3 * sigma},
    }
    return Report(cfg.to_dict(), recs, summary)


def _greedy_trial(cfg: ExperimentConfig, payload, i: int) -> dict:
    seed = derive_trial_seed(cfg.master_seed, i)
    rng = np.random.default_rng(seed)
    S = make_ball_set(cfg.set_family, cfg.u, cfg.m, rng)
    tally = MonotonicityTally()
    h, cert = greedy_construct(
        S, cfg.l, cfg.base, rng, cfg.candidates, cfg.exhaustive_threshold, tally
    )
    hist = load_histogram(S, h)
    n = cfg.n
    ln_n = math.log(n)
    target = 2 * ln_n / math.log(ln_n)
    bound = cert.load_bound() if cert.b > 1 and not cert.final_state.overflow else None
    return {
        "trial_index": i,
        "derived_seed": seed,
        "max_load": hist.max_load,
        "min_load": hist.min_load,
        "opt_value": opt(max(cfg.m, 1), n),
        "ratio": hist.max_load / opt(max(cfg.m, 1), n),
        "target": target,
        "below_target": hist.max_load < target,
        "certificate": {
            "final_phi": cert.final_phi,
            "final_phi_below_n": cert.final_phi < n,
            "chain_valid": cert.chain_valid(),
            "weakened": cert.weakened,
            "certified_max_load": bound,
            "sound": bound is None or bound >= hist.max_load,
        },
        "doubling_violations": tally.doubling_violations,
        "decreasing_violations": tally.decreasing_violations,
        "merges": tally.merges,
    }


def run_greedy_cert(cfg: ExperimentConfig) -> Report:
    recs = map_trials(_greedy_trial, cfg, None)
    loads = np.array([r["max_load"] for r in recs])
    n = len(recs)
    ok = [r for r in recs if not r["certificate"]["weakened"]]
    passed = sum(
        r["below_target"] and r["certificate"]["chain_valid"] and r["certificate"]["final_phi_below_n"]
        for r in ok
    )
    summary = _summary_stats(loads)
    summary.update(
        target=recs[0]["target"],
        pass_rate=passed / n,
        weakened_trials=n - len(ok),
        merges=sum(r["merges"] for r in recs),
        doubling_violations=sum(r["doubling_violations"] for r in recs),
        decreasing_violations=sum(r["decreasing_violations"] for r in recs),
        bound_curves=[],
    )
    checks = {
        "monotonicity": summary["doubling_violations"] == 0 and summary["decreasing_violations"] == 0,
        "certified_bound_sound": all(r["certificate"]["sound"] for r in recs),
    }
    if cfg.m == cfg.n:
        checks["all_certified_below_target"] = passed == n
    summary["checks"] = checks
    return Report(cfg.to_dict(), recs, summary)


RUNNERS = {
    "maxload-tail": run_maxload_tail,
    "expectation": run_expectation,
    "two-sided": run_two_sided,
    "nullity": run_nullity,
    "tail-lemma": run_tail_lemma,
    "greedy-cert": run_greedy_cert,
    "baseline-random": run_baseline_random,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.experiment](cfg)
