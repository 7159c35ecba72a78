"""Boundary search and candidate sweeps over reducer configurations.

A campaign measures the lossless baseline quality of each application, finds
two boundary configurations per method (the largest bound that is still
quality-neutral within a tolerance, and the largest bound whose quality stays
above the acceptance threshold), then evaluates an arithmetic ladder of
candidate bounds between them.  Every evaluation lands in an append-only
line-delimited store and an optional content-addressed cache.

Codec quality degrades monotonically as the bound grows, so boundary
searches bisect.  Sampling is noisy and non-monotone; those domains are
probed on a uniform grid instead.  For fraction-based sampling a *smaller*
bound value means more compression, and boundary selection accounts for
that inversion.
"""

from __future__ import annotations

import hashlib
import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, InfeasibleSearchError, PpressError
from .quality import Application, run_application
from .reducers import (
    Layout,
    Method,
    Mode,
    ReducerConfig,
    ReducerKnobs,
    compress,
    decompress,
    error_report,
    retained_rows,
)
from .reducers.config import SAMPLING_METHODS
from .tabular import Dataset

_FRACTION_METHODS = {Method.SAMPLE_WR, Method.SAMPLE_WOR}


@dataclass(frozen=True)
class DatasetPair:
    """Train and validation splits evaluated together."""

    train: Dataset
    validation: Dataset
    id: str = field(init=False)

    def __post_init__(self) -> None:
        if self.train.n_feat != self.validation.n_feat:
            raise ConfigError("train/validation column counts differ")
        h = hashlib.sha256()
        h.update(self.train.id.encode())
        h.update(self.validation.id.encode())
        object.__setattr__(self, "id", h.hexdigest()[:16])


@dataclass(frozen=True)
class SearchDomain:
    """The searchable bound interval for one method+mode, knobs held fixed."""

    method: Method
    mode: Mode = Mode.NONE
    bound_min: float = 0.0
    bound_max: float = 0.0
    scale: str = "log10"
    layout: Layout = Layout.BY_COLUMN
    knobs: ReducerKnobs = field(default_factory=ReducerKnobs)

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "layout", Layout(self.layout))
        if not 0 < self.bound_min < self.bound_max:
            raise ConfigError(
                f"need 0 < bound_min < bound_max, got [{self.bound_min}, {self.bound_max}]"
            )
        if self.scale not in ("linear", "log10"):
            raise ConfigError(f"scale must be linear or log10, got {self.scale!r}")
        self.config(self.bound_min)  # validates method/mode pairing

    def config(self, bound: float) -> ReducerConfig:
        return ReducerConfig(self.method, self.mode, (bound,), self.layout, self.knobs)

    @property
    def noisy(self) -> bool:
        """Quality is not a monotone function of the bound; scan, don't bisect."""
        return self.method in SAMPLING_METHODS

    @property
    def bound_compresses_upward(self) -> bool:
        """True when a larger bound value means more compression."""
        return self.method not in _FRACTION_METHODS


@dataclass(frozen=True)
class SearchSpec:
    """User budget and thresholds for one campaign."""

    tau: float
    n_candidates: int
    eta: float = 1e-3
    max_iters: int = 30
    replicates: int = 1

    def __post_init__(self) -> None:
        if self.n_candidates < 2:
            raise ConfigError(f"need at least 2 candidates, got {self.n_candidates}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")


@dataclass(frozen=True)
class EvaluationRecord:
    """One evaluated (dataset pair, application, configuration) point."""

    record_id: str
    dataset_id: str
    app_id: str
    config: dict
    compress_target: str
    seed: int
    ok: bool
    error: str | None
    ratio: float | None
    compress_mbps: float | None
    decompress_mbps: float | None
    psi: float | None
    metric: str
    direction: str
    report: dict | None
    t_compress: float
    t_decompress: float
    t_app: float
    timestamp: float
    cached: bool = False

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "dataset_id": self.dataset_id,
            "app_id": self.app_id,
            "config": self.config,
            "compress_target": self.compress_target,
            "seed": self.seed,
            "ok": self.ok,
            "error": self.error,
            "ratio": self.ratio,
            "compress_mbps": self.compress_mbps,
            "decompress_mbps": self.decompress_mbps,
            "psi": self.psi,
            "metric": self.metric,
            "direction": self.direction,
            "report": self.report,
            "t_compress": self.t_compress,
            "t_decompress": self.t_decompress,
            "t_app": self.t_app,
            "timestamp": self.timestamp,
            "cached": self.cached,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationRecord":
        return cls(**d)

    def content_key(self) -> str:
        """Everything except timings, timestamp and cache provenance."""
        d = self.to_dict()
        for k in ("t_compress", "t_decompress", "t_app", "timestamp", "cached",
                  "compress_mbps", "decompress_mbps"):
            d.pop(k)
        return json.dumps(d, sort_keys=True)


class RecordStore:
    """Append-only JSON-lines record log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: EvaluationRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(record.to_dict(), sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def load(self) -> list[EvaluationRecord]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(EvaluationRecord.from_dict(json.loads(line)))
        return out


def cache_key(
    pair: DatasetPair, app: Application, config: ReducerConfig, compress_target: str
) -> str:
    h = hashlib.sha256()
    for part in (pair.id, app.id, str(app.seed), config.canonical_json(), compress_target):
        h.update(part.encode())
        h.update(b"\x00")
    return h.hexdigest()[:32]


def _cache_path(cache_dir: str | Path, key: str) -> Path:
    return Path(cache_dir) / f"{key}.json"


_REPORT_FIELDS = ("max_abs_err", "max_rel_to_range_err", "mse", "psnr_db")


def eval_config(
    pair: DatasetPair,
    app: Application,
    config: ReducerConfig,
    compress_target: str = "both",
    cache_dir: str | Path | None = None,
) -> EvaluationRecord:
    """Compress, restore, run the application, and summarize the point.

    Codec and application failures come back as a failed record instead of
    raising, so a campaign can keep going.
    """
    if compress_target not in ("train", "validation", "both"):
        raise ConfigError(f"bad compress_target {compress_target!r}")
    key = cache_key(pair, app, config, compress_target)
    if cache_dir is not None:
        path = _cache_path(cache_dir, key)
        if path.exists():
            rec = EvaluationRecord.from_dict(json.loads(path.read_text()))
            return replace(rec, cached=True)

    parts = {}
    if compress_target in ("train", "both"):
        parts["train"] = pair.train
    if compress_target in ("validation", "both"):
        parts["validation"] = pair.validation

    t_comp = t_dec = t_app = 0.0
    ratio = None
    c_mbps = d_mbps = None
    psi = None
    report: dict | None = None
    ok = True
    err_msg = None
    try:
        restored = {"train": pair.train, "validation": pair.validation}
        artifacts = {}
        for name, ds in parts.items():
            art, dt, _ = compress(ds, config)
            artifacts[name] = art
            t_comp += dt
            out, dt, _ = decompress(art, names=ds.names)
            t_dec += dt
            restored[name] = out
        if config.method in SAMPLING_METHODS:
            orig = sum(a.n_obs for a in artifacts.values())
            kept = sum(retained_rows(a) for a in artifacts.values())
            ratio = orig / kept
        else:
            orig = sum(a.orig_bytes for a in artifacts.values())
            comp = sum(a.comp_bytes for a in artifacts.values())
            ratio = orig / comp
            report = {}
            for name, ds in parts.items():
                rep = error_report(ds, restored[name])
                report[name] = {f: getattr(rep, f) for f in _REPORT_FIELDS}
        total_bytes = sum(ds.n_bytes for ds in parts.values())
        c_mbps = total_bytes / 1e6 / max(t_comp, 1e-12)
        d_mbps = total_bytes / 1e6 / max(t_dec, 1e-12)
        psi, t_app = run_application(restored["train"], restored["validation"], app)
    except PpressError as exc:
        ok = False
        err_msg = f"{type(exc).__name__}: {exc}"

    rec = EvaluationRecord(
        record_id=key,
        dataset_id=pair.id,
        app_id=app.id,
        config=config.to_dict(),
        compress_target=compress_target,
        seed=app.seed,
        ok=ok,
        error=err_msg,
        ratio=ratio,
        compress_mbps=c_mbps,
        decompress_mbps=d_mbps,
        psi=psi,
        metric=app.metric.name.value,
        direction=app.metric.direction,
        report=report,
        t_compress=t_comp,
        t_decompress=t_dec,
        t_app=t_app,
        timestamp=time.time(),
        cached=False,
    )
    if cache_dir is not None and ok:
        path = _cache_path(cache_dir, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(rec.to_dict(), sort_keys=True))
    return rec


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one boundary search."""

    config: ReducerConfig
    bound: float
    satisfied: bool
    probes: tuple[tuple[float, float], ...]
    records: tuple[EvaluationRecord, ...]


ProbeFn = Callable[[float], float]


class _Prober:
    """Evaluates a bound (replicate-median quality) and keeps the records."""

    def __init__(self, domain, pair, app, spec, compress_target, cache_dir, probe):
        self.domain = domain
        self.pair = pair
        self.app = app
        self.spec = spec
        self.compress_target = compress_target
        self.cache_dir = cache_dir
        self.probe = probe
        self.records: list[EvaluationRecord] = []
        self.probes: list[tuple[float, float]] = []

    def __call__(self, bound: float) -> float:
        if self.probe is not None:
            psi = float(self.probe(bound))
        else:
            config = self.domain.config(bound)
            values = []
            for i in range(self.spec.replicates):
                rec = eval_config(
                    self.pair,
                    self.app.with_seed(self.app.seed + i),
                    config,
                    self.compress_target,
                    self.cache_dir,
                )
                self.records.append(rec)
                if rec.ok:
                    values.append(rec.psi)
            if not values:
                raise InfeasibleSearchError(
                    f"all replicates failed at bound {bound:g}"
                )
            psi = float(statistics.median(values))
        self.probes.append((bound, psi))
        return psi


def _midpoint(lo: float, hi: float, scale: str) -> float:
    if scale == "log10":
        return 10.0 ** ((math.log10(lo) + math.log10(hi)) / 2.0)
    return (lo + hi) / 2.0


def _scan_bounds(domain: SearchDomain, count: int) -> np.ndarray:
    if domain.scale == "log10":
        return np.logspace(
            math.log10(domain.bound_min), math.log10(domain.bound_max), count
        )
    return np.linspace(domain.bound_min, domain.bound_max, count)


def _bisect_largest(
    lo: float, hi: float, ok_at: Callable[[float], bool], scale: str, budget: int
) -> float:
    """Largest x in [lo, hi] passing ok_at, assuming a single pass/fail edge.

    Caller guarantees ok_at(lo) is true and ok_at(hi) false; budget counts
    further probes.
    """
    for _ in range(budget):
        mid = _midpoint(lo, hi, scale)
        if mid <= lo or mid >= hi:
            break  # interval exhausted at float resolution
        if ok_at(mid):
            lo = mid
        else:
            hi = mid
    return lo


def find_upper(
    domain: SearchDomain,
    pair: DatasetPair | None,
    app: Application | None,
    spec: SearchSpec,
    phi: float,
    compress_target: str = "both",
    cache_dir: str | Path | None = None,
    probe: ProbeFn | None = None,
) -> SearchResult:
    """Most-compressing bound whose quality still matches the baseline.

    "Matches" means |phi - psi| <= eta * |phi|.  When even the least
    aggressive bound misses that tolerance, it is returned with
    satisfied=False (nothing in the domain is quality-neutral).
    """
    prober = _Prober(domain, pair, app, spec, compress_target, cache_dir, probe)
    tol = spec.eta * abs(phi)

    def ok_at(bound: float) -> bool:
        return abs(phi - prober(bound)) <= tol

    if domain.noisy:
        grid = _scan_bounds(domain, 2 * spec.max_iters)
        passing = [b for b in grid if ok_at(float(b))]
        if passing:
            best = max(passing) if domain.bound_compresses_upward else min(passing)
            found, satisfied = float(best), True
        else:
            gentle = domain.bound_min if domain.bound_compresses_upward else domain.bound_max
            found, satisfied = float(gentle), False
    else:
        if ok_at(domain.bound_max):
            found, satisfied = domain.bound_max, True
        elif not ok_at(domain.bound_min):
            found, satisfied = domain.bound_min, False
        else:
            found = _bisect_largest(
                domain.bound_min,
                domain.bound_max,
                ok_at,
                domain.scale,
                spec.max_iters - 2,
            )
            satisfied = True
    return SearchResult(
        config=domain.config(found),
        bound=found,
        satisfied=satisfied,
        probes=tuple(prober.probes),
        records=tuple(prober.records),
    )


def find_lower(
    domain: SearchDomain,
    pair: DatasetPair | None,
    app: Application | None,
    spec: SearchSpec,
    phi: float,
    compress_target: str = "both",
    cache_dir: str | Path | None = None,
    probe: ProbeFn | None = None,
) -> SearchResult:
    """Most-compressing bound whose quality stays above the threshold tau.

    Raises InfeasibleSearchError when no bound in the domain qualifies.
    """
    if not phi > spec.tau:
        raise InfeasibleSearchError(
            f"baseline quality {phi:g} does not exceed tau {spec.tau:g}"
        )
    prober = _Prober(domain, pair, app, spec, compress_target, cache_dir, probe)

    def ok_at(bound: float) -> bool:
        return prober(bound) > spec.tau

    if domain.noisy:
        grid = _scan_bounds(domain, 2 * spec.max_iters)
        passing = [b for b in grid if ok_at(float(b))]
        if not passing:
            raise InfeasibleSearchError(
                "no acceptable configuration: quality at or below tau everywhere"
            )
        best = max(passing) if domain.bound_compresses_upward else min(passing)
        found = float(best)
    else:
        if ok_at(domain.bound_max):
            found = domain.bound_max
        elif not ok_at(domain.bound_min):
            raise InfeasibleSearchError(
                "no acceptable configuration: quality at or below tau "
                f"even at bound {domain.bound_min:g}"
            )
        else:
            found = _bisect_largest(
                domain.bound_min,
                domain.bound_max,
                ok_at,
                domain.scale,
                spec.max_iters - 2,
            )
    return SearchResult(
        config=domain.config(found),
        bound=found,
        satisfied=True,
        probes=tuple(prober.probes),
        records=tuple(prober.records),
    )


@dataclass(frozen=True)
class CandidateSet:
    """The boundary configs plus the evenly spaced ladder between them."""

    lower: ReducerConfig
    upper: ReducerConfig
    points: tuple[ReducerConfig, ...]
    degenerate: bool = False


def candidate_points(
    lower: ReducerConfig, upper: ReducerConfig, n_candidates: int
) -> CandidateSet:
    """Arithmetic ladder of bounds from the lower boundary to the upper.

    The lower boundary carries the larger bound value, so the ladder runs
    from most compression to least.  Coinciding boundaries collapse to a
    single point flagged degenerate.
    """
    if n_candidates < 2:
        raise ConfigError(f"need at least 2 candidates, got {n_candidates}")
    if (
        lower.method is not upper.method
        or lower.mode is not upper.mode
        or lower.layout is not upper.layout
        or lower.knobs != upper.knobs
    ):
        raise ConfigError("boundary configs come from different domains")
    lo_b = lower.bound
    up_b = upper.bound
    if lo_b == up_b:
        return CandidateSet(lower, upper, (lower,), degenerate=True)
    bounds = np.linspace(lo_b, up_b, n_candidates)
    bounds[0] = lo_b
    bounds[-1] = up_b
    points = tuple(
        ReducerConfig(lower.method, lower.mode, (float(b),), lower.layout, lower.knobs)
        for b in bounds
    )
    return CandidateSet(lower, upper, points, degenerate=False)


def measure_baseline(
    pair: DatasetPair,
    app: Application,
    spec: SearchSpec,
    compress_target: str = "both",
    cache_dir: str | Path | None = None,
) -> tuple[float, float, list[EvaluationRecord]]:
    """Baseline quality via identity reduction; returns (phi, spread, records)."""
    config = ReducerConfig(Method.NONE)
    records = []
    values = []
    for i in range(spec.replicates):
        rec = eval_config(
            pair, app.with_seed(app.seed + i), config, compress_target, cache_dir
        )
        records.append(rec)
        if rec.ok:
            values.append(rec.psi)
    if not values:
        raise InfeasibleSearchError("baseline evaluation failed for every replicate")
    return float(statistics.median(values)), float(max(values) - min(values)), records


def run_campaign(
    pair: DatasetPair,
    apps: Sequence[Application],
    methods: Sequence[SearchDomain | ReducerConfig],
    spec: SearchSpec,
    store: RecordStore | None = None,
    compress_target: str = "both",
    cache_dir: str | Path | None = None,
    parallelism: int = 1,
) -> list[EvaluationRecord]:
    """Evaluate every app against every method; returns records in order.

    Fixed configurations (no bound to search) are evaluated once per app.
    Search domains get two boundary searches plus the candidate ladder.
    Infeasible searches and failed points are recorded or skipped without
    aborting the rest of the campaign.
    """
    if not apps or not methods:
        raise ConfigError("campaign needs at least one application and one method")
    records: list[EvaluationRecord] = []

    def emit(rec: EvaluationRecord) -> None:
        records.append(rec)
        if store is not None:
            store.append(rec)

    def evaluate_ladder(app: Application, configs: Sequence[ReducerConfig]) -> None:
        def one(config: ReducerConfig) -> EvaluationRecord:
            return eval_config(pair, app, config, compress_target, cache_dir)

        if parallelism > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                for rec in pool.map(one, configs):
                    emit(rec)
        else:
            for config in configs:
                emit(one(config))

    for app in apps:
        phi, _, base_records = measure_baseline(
            pair, app, spec, compress_target, cache_dir
        )
        for rec in base_records:
            emit(rec)
        for entry in methods:
            if isinstance(entry, ReducerConfig):
                if entry.method is Method.NONE:
                    continue  # already measured as the baseline
                emit(eval_config(pair, app, entry, compress_target, cache_dir))
                continue
            try:
                upper = find_upper(
                    entry, pair, app, spec, phi, compress_target, cache_dir
                )
                for rec in upper.records:
                    emit(rec)
                lower = find_lower(
                    entry, pair, app, spec, phi, compress_target, cache_dir
                )
                for rec in lower.records:
                    emit(rec)
            except InfeasibleSearchError:
                continue
            ladder = candidate_points(lower.config, upper.config, spec.n_candidates)
            evaluate_ladder(app, ladder.points)
    return records
