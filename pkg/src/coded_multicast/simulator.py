"""Monte Carlo driver: placement -> demand -> conflict graph -> coloring -> rate.

Every trial owns a random stream derived from ``(seed, M, trial)`` so trials
can run in any order or in parallel and still aggregate to the same CSV.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from . import bound as bound_mod
from .conflict_graph import build, export_dimacs, user_sets
from .delivery import verify_round_trip
from .gcc import gcc
from .grasp import GraspParams, grasp
from .model import (
    CachingDistribution,
    DemandDistribution,
    DemandVector,
    RateSample,
    SystemConfig,
    sample_demand,
    zipf_distribution,
)
from .oracle import chromatic_number
from .placement import CachePlacement, lfu_files, lfu_place, rap_place

log = logging.getLogger(__name__)

SCHEMES = ("gcc", "grasp", "lfu", "oracle")
PLACEMENTS = ("rap-optimal", "rap-uniform", "lfu")
CSV_COLUMNS = ("scheme", "n", "m", "B", "alpha", "M", "trials", "avg_rate", "std_rate", "avg_colors", "r_ub",
               "seed", "runtime_ms")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    users: int = 10
    files: int = 250
    packets: int = 100
    cache_sizes: tuple[float, ...] = (50.0,)
    alpha: float = 0.2
    schemes: tuple[str, ...] = ("gcc", "grasp", "lfu")
    placement: str = "rap-optimal"
    grasp_iterations: int = 100
    trials: int = 200
    seed: int = 0
    output: str | None = None
    export_dimacs: str | None = None
    bound_only: bool = False
    fix_placement: bool = False
    no_timestamp: bool = False
    bound_form: str = bound_mod.PER_SUBSET_MAX
    verify: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cache_sizes", tuple(float(M) for M in self.cache_sizes))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.users < 1 or self.files < 1 or self.packets < 1:
            raise ConfigError("users, files and packets must be positive")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        if self.grasp_iterations < 1:
            raise ConfigError("grasp_iterations must be at least 1")
        for M in self.cache_sizes:
            if not 0 <= M <= self.files:
                raise ConfigError(f"cache size {M} outside [0, {self.files}]")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"unknown placement {self.placement!r}; choose from {', '.join(PLACEMENTS)}")
        if self.bound_form not in bound_mod.AGGREGATIONS:
            raise ConfigError(f"unknown bound form {self.bound_form!r}")

    def system(self, M: float) -> SystemConfig:
        return SystemConfig.homogeneous(self.users, self.files, self.packets, M)

    def demand(self) -> DemandDistribution:
        return zipf_distribution(self.files, self.alpha, self.users)


# ---------------------------------------------------------------- config parsing


def _real(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(s)
    return v


def _flag(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _reals(s: str) -> tuple[float, ...]:
    return tuple(_real(x) for x in s.split(",") if x.strip())


def _names(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


# key -> (field, converter, description of expected value)
_KEYS = {
    "users": ("users", int, "integer"),
    "files": ("files", int, "integer"),
    "packets": ("packets", int, "integer"),
    "cache_sizes": ("cache_sizes", _reals, "comma-separated reals"),
    "alpha": ("alpha", _real, "real"),
    "scheme": ("schemes", _names, "scheme names"),
    "schemes": ("schemes", _names, "scheme names"),
    "placement": ("placement", str.strip, "placement name"),
    "grasp_iterations": ("grasp_iterations", int, "integer"),
    "trials": ("trials", int, "integer"),
    "seed": ("seed", int, "integer"),
    "output": ("output", str.strip, "path"),
    "export_dimacs": ("export_dimacs", str.strip, "path"),
    "bound_only": ("bound_only", _flag, "boolean"),
    "fix_placement": ("fix_placement", _flag, "boolean"),
    "no_timestamp": ("no_timestamp", _flag, "boolean"),
    "bound_form": ("bound_form", str.strip, "bound form"),
    "verify": ("verify", _flag, "boolean"),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key=value`` lines (``#`` starts a comment) into config field values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        name, conv, expected = _KEYS[key]
        try:
            values[name] = conv(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: expected {expected}") from None
    return values


def parse_config(text: str | None = None, overrides: Mapping | None = None) -> ExperimentConfig:
    """Build a config from file text and flag overrides; overrides win."""
    values = parse_config_text(text) if text else {}
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**values)


def describe(config: ExperimentConfig) -> list[str]:
    out = []
    for k, v in asdict(config).items():
        if isinstance(v, tuple):
            v = ",".join(_fmt(x) for x in v)
        elif isinstance(v, float):
            v = _fmt(v)
        out.append(f"{k}={'' if v is None else v}")
    return out


def _fmt(x) -> str:
    return format(x, "g") if isinstance(x, float) else str(x)


# ---------------------------------------------------------------- trials


@dataclass(frozen=True)
class TrialResult:
    M: float
    trial: int
    raw: dict[str, RateSample]
    reported: dict[str, float]
    demand: DemandVector
    demand_hash: str
    vertices: int
    runtime_s: dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0


def _m_key(M: float) -> int:
    return int(round(M * 1000))


def trial_streams(seed: int, M: float, trial: int) -> list[np.random.Generator]:
    """Independent generators for placement, demand, gcc, grasp and payloads."""
    ss = np.random.SeedSequence([seed, _m_key(M), trial])
    return [np.random.default_rng(s) for s in ss.spawn(5)]


def fixed_placement_stream(seed: int, M: float) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _m_key(M)]))


def lfu_rate(Q: DemandDistribution, demand: DemandVector, M, config: SystemConfig) -> RateSample:
    """Uncoded rate under LFU caching: distinct requested files some requester lacks."""
    Ms = np.broadcast_to(np.asarray(M, dtype=np.float64), (config.n,))
    cfg = replace(config, M=tuple(Ms))
    missing = set()
    for u in range(1, config.n + 1):
        f = demand[u]
        if f - 1 not in set(lfu_files(cfg, Q, u).tolist()):
            missing.add(f)
    return RateSample(len(missing) * config.B, config.B, "lfu")


def _caching_distribution(config: ExperimentConfig, M: float, Q: DemandDistribution):
    """RAP distribution for one cache size, and its bound (None for LFU placement)."""
    system = config.system(M)
    if config.placement == "lfu":
        return None, None
    if config.placement == "rap-uniform":
        P = CachingDistribution.uniform(config.files, config.users)
        return P, bound_mod.rate_upper_bound(P, Q, system.cache_sizes, aggregation=config.bound_form)
    opt = bound_mod.optimize_caching_distribution(Q, system, aggregation=config.bound_form)
    return opt.P, opt.bound


def _place(config: ExperimentConfig, M: float, Q, P, rng) -> CachePlacement:
    system = config.system(M)
    if P is None:
        return lfu_place(system, Q)
    return rap_place(system, P, rng)


def run_trial(config: ExperimentConfig, M: float, trial: int, P: CachingDistribution | None = None,
              Q: DemandDistribution | None = None, placement: CachePlacement | None = None) -> TrialResult:
    """One Monte Carlo trial; ``P`` is computed on the fly when not supplied."""
    t0 = time.perf_counter()
    Q = Q if Q is not None else config.demand()
    system = config.system(M)
    if P is None and config.placement != "lfu":
        P, _ = _caching_distribution(config, M, Q)
    rng_place, rng_demand, rng_gcc, rng_grasp, rng_payload = trial_streams(config.seed, M, trial)
    if placement is None:
        if config.fix_placement:
            rng_place = fixed_placement_stream(config.seed, M)
        placement = _place(config, M, Q, P, rng_place)
    demand = sample_demand(Q, rng_demand)
    graph = build(placement, demand, system)
    if config.export_dimacs:
        out = Path(config.export_dimacs)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"trial_{_fmt(float(M))}_{trial}.col", "wb") as fh:
            export_dimacs(graph, fh)

    lfu = lfu_rate(Q, demand, M, system)
    raw: dict[str, RateSample] = {}
    reported: dict[str, float] = {}
    runtime: dict[str, float] = {}
    for scheme in config.schemes:
        s0 = time.perf_counter()
        if scheme == "lfu":
            sample = lfu
        elif scheme == "gcc":
            coloring = gcc(graph, user_sets(graph, placement, demand), rng_gcc)
            sample = RateSample(coloring.num_colors, system.B, "gcc")
        elif scheme == "grasp":
            params = GraspParams(config.grasp_iterations, seed=int(rng_grasp.integers(2**63)))
            coloring = grasp(graph, params)
            sample = RateSample(coloring.num_colors, system.B, "grasp")
        else:
            coloring = chromatic_number(graph).witness
            sample = RateSample(coloring.num_colors, system.B, "oracle")
        if config.verify and scheme in ("gcc", "grasp", "oracle"):
            report = verify_round_trip(placement, demand, coloring, rng_payload, size=8, graph=graph)
            if not report.ok:
                raise AssertionError(f"trial {trial} at M={M}: {scheme} failed delivery: {report.detail}")
        raw[scheme] = sample
        reported[scheme] = min(lfu.rate, sample.rate) if scheme in ("gcc", "grasp") else sample.rate
        runtime[scheme] = time.perf_counter() - s0
    digest = hashlib.sha1(",".join(map(str, demand.files)).encode()).hexdigest()[:12]
    return TrialResult(M, trial, raw, reported, demand, digest, len(graph), runtime, time.perf_counter() - t0)


# ---------------------------------------------------------------- experiments


@dataclass
class PointSummary:
    M: float
    scheme: str
    reported: np.ndarray
    raw_rates: np.ndarray
    colors: np.ndarray
    r_ub: float | None
    runtime_ms: float

    @property
    def avg_rate(self) -> float:
        return float(self.reported.mean())

    @property
    def std_rate(self) -> float:
        return float(self.reported.std(ddof=1)) if self.reported.size > 1 else 0.0

    @property
    def std_error(self) -> float:
        return self.std_rate / math.sqrt(self.reported.size)

    @property
    def avg_raw_rate(self) -> float:
        return float(self.raw_rates.mean())


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[PointSummary] = field(default_factory=list)
    bounds: dict[float, bound_mod.BoundResult | None] = field(default_factory=dict)
    csv_text: str = ""

    def point(self, scheme: str, M: float) -> PointSummary:
        for p in self.points:
            if p.scheme == scheme and p.M == M:
                return p
        raise KeyError((scheme, M))


def _summaries(config: ExperimentConfig, M: float, trials: list[TrialResult], r_ub) -> list[PointSummary]:
    out = []
    for scheme in config.schemes:
        out.append(PointSummary(
            M, scheme,
            np.array([t.reported[scheme] for t in trials]),
            np.array([t.raw[scheme].rate for t in trials]),
            np.array([t.raw[scheme].colors for t in trials]),
            r_ub if scheme in ("gcc", "grasp") else None,
            1000.0 * sum(t.runtime_s[scheme] for t in trials),
        ))
    return out


def _row(config: ExperimentConfig, M: float, scheme: str, trials: int, avg, std, colors, r_ub, runtime) -> list[str]:
    def num(x):
        return "" if x is None else f"{x:.6f}"
    runtime_txt = "0" if config.no_timestamp else f"{runtime:.1f}"
    return [scheme, str(config.users), str(config.files), str(config.packets), _fmt(float(config.alpha)),
            _fmt(float(M)), str(trials), num(avg), num(std), num(colors), num(r_ub), str(config.seed), runtime_txt]


def _trial_job(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig, workers: int = 1, sink: io.TextIOBase | None = None) -> ExperimentResult:
    """Sweep the cache sizes and write one CSV row per (M, scheme) plus a bound row per M."""
    Q = config.demand()
    result = ExperimentResult(config)
    buf = io.StringIO()
    for line in describe(config):
        buf.write(f"# {line}\n")
    if not config.no_timestamp:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)

    out_fh = open(config.output, "w", newline="") if config.output else None
    flushed = 0

    def flush():
        nonlocal flushed
        text = buf.getvalue()
        for fh in (out_fh, sink):
            if fh is not None:
                fh.write(text[flushed:])
                fh.flush()
        flushed = len(text)

    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for M in config.cache_sizes:
            t0 = time.perf_counter()
            P, bnd = _caching_distribution(config, M, Q)
            result.bounds[M] = bnd
            bnd_value = bnd.r_ub if bnd is not None else None
            bound_ms = 1000.0 * (time.perf_counter() - t0)
            if not config.bound_only and config.schemes:
                fixed = None
                if config.fix_placement:
                    fixed = _place(config, M, Q, P, fixed_placement_stream(config.seed, M))
                jobs = [(config, M, k, P, Q, fixed) for k in range(config.trials)]
                mapper = pool.map if pool else map
                trials = list(mapper(_trial_job, jobs))
                for summary in _summaries(config, M, trials, bnd_value):
                    result.points.append(summary)
                    writer.writerow(_row(config, M, summary.scheme, config.trials, summary.avg_rate,
                                         summary.std_rate, float(summary.colors.mean()), summary.r_ub,
                                         summary.runtime_ms))
                log.info("M=%s done: %s", _fmt(float(M)),
                         ", ".join(f"{s.scheme}={s.avg_rate:.3f}" for s in result.points if s.M == M))
            if bnd_value is not None:
                writer.writerow(_row(config, M, "bound", 0, bnd_value, 0.0, None, bnd_value, bound_ms))
            flush()
    finally:
        if pool:
            pool.shutdown()
        if out_fh:
            out_fh.close()
    result.csv_text = buf.getvalue()
    return result
