"""Cross-validated benchmark suites and paired equivalence checks."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .data import Dataset, kfold_split, resolve_dataset
from .gp import ConfigError, GpConfig, run_gp
from .gsgp import GsgpConfig, evolve_gsgp
from .red import evolve_red, red_node_count, red_semantics
from .stats import median, median_exact, wilcoxon_signed_rank

log = logging.getLogger(__name__)

ENGINES = ("gp", "gsgp", "gsgp-red")
MARKERS = {"better": "▲", "worse": "▼", "indistinguishable": "♦", "inconclusive": "?"}


def derive_seed(base_seed: int, dataset_index: int, fold: int, repeat: int) -> int:
    """Run seed; independent of the engine so gsgp and gsgp-red share streams."""
    ss = np.random.SeedSequence([base_seed, dataset_index, fold, repeat])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def split_seed(base_seed: int, dataset_index: int) -> int:
    ss = np.random.SeedSequence([base_seed, dataset_index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class SuiteConfig:
    datasets: list[str]
    engines: tuple[str, ...] = ENGINES
    folds: int = 5
    repeats: int = 6
    base_seed: int = 0
    gp: dict[str, Any] = field(default_factory=dict)
    gsgp: dict[str, Any] = field(default_factory=dict)
    workers: int = 1
    alpha: float = 0.05
    target_column: int | str = "last"

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        bad = [e for e in self.engines if e not in ENGINES]
        if bad:
            raise ConfigError(f"unknown engine(s) {bad}; choose from {ENGINES}")
        # fail early on bad engine parameters
        GpConfig(**self.gp)
        GsgpConfig(**self.gsgp)


@dataclass
class EngineSummary:
    dataset: str
    engine: str
    runs: int
    failures: int
    median_train_rmse: float | None
    median_test_rmse: float | None
    median_size: str | None
    median_time: float | None


@dataclass
class Comparison:
    dataset: str
    metric: str
    comparator: str
    outcome: str  # better / worse / indistinguishable / inconclusive, from gsgp-red's view
    statistic: float
    n: int
    p_value: float | None

    @property
    def marker(self) -> str:
        return MARKERS[self.outcome]


@dataclass
class SuiteReport:
    summaries: list[EngineSummary]
    comparisons: list[Comparison]
    failures: list[dict[str, Any]]
    aborted_datasets: list[dict[str, str]]
    runs: list[dict[str, Any]]
    workers: int
    schema_version: int = 1

    def summary(self, dataset: str, engine: str) -> EngineSummary:
        for s in self.summaries:
            if s.dataset == dataset and s.engine == engine:
                return s
        raise KeyError((dataset, engine))

    def to_dict(self, include_runs: bool = True) -> dict[str, Any]:
        d = {
            "schema_version": self.schema_version,
            "workers": self.workers,
            "summaries": [asdict(s) for s in self.summaries],
            "comparisons": [asdict(c) | {"marker": c.marker} for c in self.comparisons],
            "failures": self.failures,
            "aborted_datasets": self.aborted_datasets,
        }
        if include_runs:
            d["runs"] = self.runs
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_text(self) -> str:
        return format_tables(self)


def _run_one(job: tuple) -> tuple[tuple, dict[str, Any] | None, str | None]:
    key, engine, cfg, train, test = job
    try:
        if engine == "gp":
            report = run_gp(GpConfig(**cfg), train, test)
        elif engine == "gsgp":
            report = evolve_gsgp(GsgpConfig(**cfg), train, test).report
        else:
            report = evolve_red(GsgpConfig(**cfg), train, test).report
    except Exception as exc:  # recorded, never dropped
        return key, None, f"{type(exc).__name__}: {exc}"
    return key, report.to_dict(), None


def _finite(v) -> float:
    return float(v) if v is not None else math.inf


def run_suite(config: SuiteConfig) -> SuiteReport:
    datasets: list[tuple[int, Dataset]] = []
    aborted = []
    names: set[str] = set()
    for i, spec in enumerate(config.datasets):
        try:
            ds = resolve_dataset(spec, config.target_column)
            if ds.name in names:
                ds = ds.subset(np.arange(ds.n), f"{ds.name}#{i}")
            names.add(ds.name)
            datasets.append((i, ds))
        except Exception as exc:
            log.error("dataset %s failed to load: %s", spec, exc)
            aborted.append({"dataset": spec, "error": f"{type(exc).__name__}: {exc}"})

    jobs = []
    for di, ds in datasets:
        try:
            folds = kfold_split(ds, config.folds, seed=split_seed(config.base_seed, di))
        except ValueError as exc:
            aborted.append({"dataset": ds.name, "error": str(exc)})
            continue
        for fold in range(config.folds):
            tr, te = folds.train_test(fold)
            train, test = ds.subset(tr, ds.name), ds.subset(te, ds.name)
            for rep in range(config.repeats):
                seed = derive_seed(config.base_seed, di, fold, rep)
                for engine in config.engines:
                    base = config.gp if engine == "gp" else config.gsgp
                    cfg = dict(base, seed=seed)
                    jobs.append(((ds.name, engine, fold, rep), engine, cfg, train, test))

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    runs, failures = [], []
    for (ds_name, engine, fold, rep), report, err in results:
        row = {"dataset": ds_name, "engine": engine, "fold": fold, "repeat": rep}
        if err is not None:
            failures.append(row | {"error": err})
        else:
            runs.append(row | {"report": report})

    summaries: list[EngineSummary] = []
    comparisons: list[Comparison] = []
    for _, ds in datasets:
        by_engine: dict[str, dict[tuple[int, int], dict]] = {}
        for r in runs:
            if r["dataset"] == ds.name:
                by_engine.setdefault(r["engine"], {})[(r["fold"], r["repeat"])] = r["report"]
        for engine in config.engines:
            reps = list(by_engine.get(engine, {}).values())
            n_fail = sum(1 for f in failures if f["dataset"] == ds.name and f["engine"] == engine)
            summaries.append(
                EngineSummary(
                    ds.name,
                    engine,
                    len(reps),
                    n_fail,
                    median([_finite(r["best_train_rmse"]) for r in reps]) if reps else None,
                    median([_finite(r["best_test_rmse"]) for r in reps]) if reps else None,
                    median_exact([int(r["best_size"]) for r in reps]) if reps else None,
                    median([r["wall_time"] for r in reps]) if reps else None,
                )
            )
        red = by_engine.get("gsgp-red")
        if not red:
            continue
        for other in ("gsgp", "gp"):
            if other not in by_engine:
                continue
            paired = sorted(set(red) & set(by_engine[other]))
            for metric, get in (
                ("test_rmse", lambda r: _finite(r["best_test_rmse"])),
                ("size", lambda r: float(int(r["best_size"]))),
                ("time", lambda r: r["wall_time"]),
            ):
                x = [get(red[k]) for k in paired]
                y = [get(by_engine[other][k]) for k in paired]
                res = wilcoxon_signed_rank(x, y, config.alpha)
                if res.inconclusive:
                    outcome = "inconclusive"
                elif not res.reject:
                    outcome = "indistinguishable"
                else:
                    outcome = "better" if res.direction < 0 else "worse"
                comparisons.append(
                    Comparison(ds.name, metric, other, outcome, res.statistic, res.n, res.p_value)
                )
    return SuiteReport(summaries, comparisons, failures, aborted, runs, config.workers)


def _fmt(v, spec=".3f") -> str:
    if v is None:
        return "-"
    if isinstance(v, str):
        n = int(v.split(".")[0])
        return f"{n:,}" if n < 10**7 else f"{float(n):.2e}"
    return format(v, spec)


def format_tables(report: SuiteReport) -> str:
    """Plain-text tables: RMSE, size, and time per dataset and engine."""
    datasets = list(dict.fromkeys(s.dataset for s in report.summaries))
    engines = list(dict.fromkeys(s.engine for s in report.summaries))
    marks = {(c.dataset, c.metric, c.comparator): c.marker for c in report.comparisons}
    out = []
    for title, attr, metric in (
        ("Median RMSE (train / test)", None, "test_rmse"),
        ("Median size of the best individual (nodes)", "median_size", "size"),
        ("Median wall time (s)", "median_time", "time"),
    ):
        out.append(title)
        header = ["dataset"] + engines
        rows = []
        for ds in datasets:
            row = [ds]
            for e in engines:
                s = report.summary(ds, e)
                if attr is None:
                    cell = f"{_fmt(s.median_train_rmse)} / {_fmt(s.median_test_rmse)}"
                elif attr == "median_size":
                    cell = _fmt(s.median_size)
                else:
                    cell = _fmt(s.median_time, ".2f")
                m = marks.get((ds, metric, e))
                row.append(f"{cell} {m}" if m else cell)
            rows.append(row)
        widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
        out.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            out.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
        out.append("")
    out.append("markers compare gsgp-red against the column's engine: ▲ better, ▼ worse, ♦ indistinguishable, ? inconclusive")
    out.append(f"workers: {report.workers}")
    return "\n".join(out)


# --- paired equivalence ----------------------------------------------------


class EquivalenceError(AssertionError):
    def __init__(self, report: "EquivalenceReport"):
        super().__init__(
            f"gsgp and gsgp-red diverge: max relative deviation {report.max_trace_deviation:.3e} "
            f"first at generation {report.first_divergent_generation}"
        )
        self.report = report


@dataclass
class EquivalenceReport:
    seed: int
    generations: int
    max_trace_deviation: float
    first_divergent_generation: int | None
    max_semantics_deviation: float
    max_recomputed_deviation: float
    gsgp_size: str
    red_size: int
    red_terms: int
    log10_size_ratio: float
    warning: bool
    gsgp_trace: list[float]
    red_trace: list[float]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["gsgp_trace"] = [v if math.isfinite(v) else str(v) for v in self.gsgp_trace]
        d["red_trace"] = [v if math.isfinite(v) else str(v) for v in self.red_trace]
        return d


def relative_deviation(a: float, b: float) -> float:
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    return abs(a - b) / max(abs(a), abs(b))


WARN_TOLERANCE = 1e-9
FAIL_TOLERANCE = 1e-6


def verify_equivalence(
    seed: int, config: GsgpConfig, train: Dataset, test: Dataset | None = None
) -> EquivalenceReport:
    """Run both GSGP engines under one seed and compare them.

    Raises:
        EquivalenceError: per-generation best training RMSE deviates by more
            than 1e-6 (relative) at some generation.
    """
    cfg = GsgpConfig(**(config.to_dict() | {"seed": seed}))
    g = evolve_gsgp(cfg, train, test)
    r = evolve_red(cfg, train, test)
    ta, tb = g.report.train_rmse_trace, r.report.train_rmse_trace
    devs = [relative_deviation(a, b) for a, b in zip(ta, tb)]
    if len(ta) != len(tb):
        devs.append(math.inf)
    first = next((i for i, d in enumerate(devs) if d > WARN_TOLERANCE), None)
    sa, sb = g.best.train_semantics, r.best.train_semantics
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.maximum(np.maximum(np.abs(sa), np.abs(sb)), np.finfo(float).tiny)
        sem_dev = float(np.max(np.abs(sa - sb) / scale))
        recomputed = red_semantics(r.best, train.features)
        rec_dev = float(np.max(np.abs(recomputed - sa)) / max(float(np.max(np.abs(sa))), 1.0))
    red_size = red_node_count(r.best)
    report = EquivalenceReport(
        seed=seed,
        generations=cfg.generations,
        max_trace_deviation=max(devs) if devs else 0.0,
        first_divergent_generation=first,
        max_semantics_deviation=sem_dev,
        max_recomputed_deviation=rec_dev,
        gsgp_size=str(g.best.exact_size),
        red_size=red_size,
        red_terms=r.best.term_count,
        log10_size_ratio=math.log10(g.best.exact_size) - math.log10(red_size),
        warning=bool(devs) and max(devs) > WARN_TOLERANCE,
        gsgp_trace=list(ta),
        red_trace=list(tb),
    )
    if report.max_trace_deviation > FAIL_TOLERANCE:
        raise EquivalenceError(report)
    if report.warning:
        log.warning("gsgp/gsgp-red traces differ by %.3e (above %.0e)", report.max_trace_deviation, WARN_TOLERANCE)
    return report
