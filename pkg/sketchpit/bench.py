"""Benchmark harness: throughput, accuracy and memory protocols over repeated seeded runs.

Run `r` of every cell uses the seed `cfg.seed + r`. Throughput runs time only the loop over the resident
trace and carry no error bookkeeping; accuracy and memory are measured in separate runs.
"""
import csv
import io
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from coqpit import Coqpit, check_argument

from sketchpit.cms import CmsConfig, CountMinSketch
from sketchpit.core import PRNG_NAME, FlowKey, FrequencyEstimator, Seed, TableFullError
from sketchpit.cuckoo import CountingCuckooFilter, CuckooConfig
from sketchpit.exact_hash import HashConfig, HashEstimator
from sketchpit.metrics import PROTOCOLS as ERROR_PROTOCOLS
from sketchpit.metrics import RUNNERS, ErrorReport
from sketchpit.space_saving import SpaceSaving, SpaceSavingConfig
from sketchpit.trace import Trace, TraceStats, ZipfSpec, trace_load, trace_prefix, trace_zipf

logger = logging.getLogger(__name__)

ALGORITHMS = (
    "hash",
    "nitrohash",
    "cms",
    "cms_nomi",
    "nitrocms",
    "cuckoo",
    "nitrocuckoo",
    "nc_small",
    "spacesaving",
    "spacesaving_rap",
)
THROUGHPUT_PROTOCOLS = ("write_only", "write_read", "read_only")
CI95_METHOD = "normal approximation: 1.96 * sample_stddev / sqrt(runs)"
CSV_HEADER = ("algorithm", "trace", "protocol", "metric", "mean", "ci95", "runs", "units")
NOT_APPLICABLE = "n/a"
# shortest elapsed time a throughput run is credited with
TIMER_RESOLUTION = time.get_clock_info("perf_counter").resolution


@dataclass
class BenchConfig(Coqpit):
    """Harness configuration; every field is also a command-line flag of the same name.

    Args:
        algo (str): algorithm name, comma-separated list of names or `all`.
        protocol (str): `write_only`, `write_read`, `read_only` or `all` for the `bench` command.
        trace (str): trace file, one key per line. Exclusive with `zipf`.
        zipf (str): synthetic trace as `n,universe,alpha,seed`. Exclusive with `trace`.
        prefix (int): keep only the first `prefix` items of the trace. Defaults to None.
        p (float): sampling probability of the nitro variants.
        epsilon (float): accuracy parameter of CMS and Space Saving.
        delta (float): failure probability of CMS.
        runs (int): repetitions per cell.
        seed (int): base seed, run `r` uses `seed + r`.
        capacity (int): cuckoo capacity in slots. Defaults to the trace length.
        out (str): output path (CSV, or the trace file for `gen`). Defaults to stdout.
        warmup (bool): run one discarded pass before the first timed run.
    """

    algo: str = field(default="all", metadata={"help": "algorithm, comma-separated list or 'all'"})
    protocol: str = field(default="write_only", metadata={"help": "write_only, write_read, read_only or all"})
    trace: str = field(default=None, metadata={"help": "trace file, one key per line"})
    zipf: str = field(default=None, metadata={"help": "synthetic trace 'n,universe,alpha,seed'"})
    prefix: int = field(default=None, metadata={"help": "keep only the first K items of the trace"})
    p: float = field(default=0.01, metadata={"help": "sampling probability of the nitro variants"})
    epsilon: float = field(default=0.01, metadata={"help": "CMS and Space Saving accuracy parameter"})
    delta: float = field(default=0.01, metadata={"help": "CMS failure probability"})
    runs: int = field(default=13, metadata={"help": "repetitions per cell"})
    seed: int = field(default=0, metadata={"help": "base seed"})
    capacity: int = field(default=None, metadata={"help": "cuckoo capacity in slots, defaults to trace length"})
    out: str = field(default=None, metadata={"help": "output path, stdout if unset"})
    warmup: bool = field(default=True, metadata={"help": "discarded warm-up pass before timing"})

    def check_values(self):
        c = asdict(self)
        check_argument("protocol", c, restricted=True, enum_list=list(THROUGHPUT_PROTOCOLS) + ["all"])
        check_argument("p", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("epsilon", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("delta", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("runs", c, restricted=True, min_val=1)
        check_argument("seed", c, restricted=True, min_val=0)
        check_argument("prefix", c, restricted=True, min_val=1, allow_none=True)
        check_argument("capacity", c, restricted=True, min_val=1, allow_none=True)
        assert self.p > 0.0, " [!] p must be larger than 0."
        assert 0.0 < self.epsilon < 1.0, " [!] epsilon must be in (0, 1)."
        assert 0.0 < self.delta < 1.0, " [!] delta must be in (0, 1)."
        self.algorithms()

    def algorithms(self) -> List[str]:
        if self.algo.strip().lower() == "all":
            return list(ALGORITHMS)
        names = [a.strip().lower() for a in self.algo.split(",") if a.strip()]
        unknown = [a for a in names if a not in ALGORITHMS]
        assert names and not unknown, f" [!] Unknown algorithm(s) {unknown or self.algo}, expected {ALGORITHMS}."
        return list(dict.fromkeys(names))

    def throughput_protocols(self) -> List[str]:
        protocol = self.protocol.lower()
        if protocol == "all":
            return list(THROUGHPUT_PROTOCOLS)
        return [protocol]


@dataclass
class RunRecord(Coqpit):
    """Sidecar written next to a report so that its numbers can be reproduced."""

    config: BenchConfig = field(default_factory=BenchConfig)
    command: str = "bench"
    prng: str = PRNG_NAME
    ci95: str = CI95_METHOD


def resolve_trace(cfg: BenchConfig) -> Trace:
    """Load or generate the trace named by `cfg`, fully resident, prefix applied."""
    if bool(cfg.trace) == bool(cfg.zipf):
        raise ValueError(" [!] Exactly one of --trace and --zipf is required.")
    trace = trace_load(cfg.trace) if cfg.trace else trace_zipf(ZipfSpec.parse(cfg.zipf))
    if cfg.prefix:
        trace = trace_prefix(trace, min(cfg.prefix, trace.stats.n_items))
    return trace


def build_estimator(algorithm: str, cfg: BenchConfig, stats: TraceStats, seed: Seed) -> FrequencyEstimator:
    """Fresh estimator for `algorithm` configured from `cfg`.

    Cuckoo variants hold one slot per trace item unless `cfg.capacity` says otherwise; `nc_small` is
    nitrocuckoo with its capacity scaled by `p`.
    """
    # pylint: disable=too-many-return-statements
    capacity = cfg.capacity or stats.n_items
    if algorithm == "hash":
        return HashEstimator(HashConfig(mode="exact"), seed)
    if algorithm == "nitrohash":
        return HashEstimator(HashConfig(mode="nitro", p=cfg.p), seed)
    if algorithm == "cms":
        return CountMinSketch(CmsConfig(epsilon=cfg.epsilon, delta=cfg.delta, mode="conservative"), seed)
    if algorithm == "cms_nomi":
        return CountMinSketch(CmsConfig(epsilon=cfg.epsilon, delta=cfg.delta, mode="plain"), seed)
    if algorithm == "nitrocms":
        return CountMinSketch(CmsConfig(epsilon=cfg.epsilon, delta=cfg.delta, mode="nitro", p=cfg.p), seed)
    if algorithm == "cuckoo":
        return CountingCuckooFilter(CuckooConfig(capacity_slots=capacity, mode="plain"), seed)
    if algorithm == "nitrocuckoo":
        return CountingCuckooFilter(CuckooConfig(capacity_slots=capacity, mode="nitro", p=cfg.p), seed)
    if algorithm == "nc_small":
        return CountingCuckooFilter(
            CuckooConfig(capacity_slots=capacity, mode="nitro", p=cfg.p, capacity_scaling=cfg.p), seed
        )
    if algorithm == "spacesaving":
        return SpaceSaving(SpaceSavingConfig(epsilon=cfg.epsilon, mode="plain"), seed)
    if algorithm == "spacesaving_rap":
        return SpaceSaving(SpaceSavingConfig(epsilon=cfg.epsilon, mode="rap"), seed)
    raise ValueError(f" [!] Unknown algorithm '{algorithm}', expected one of {ALGORITHMS}.")


# ---------------------------------------------------------------------------- #
#                                  Throughput                                  #
# ---------------------------------------------------------------------------- #


@dataclass
class ThroughputRun:
    ops: int
    elapsed: float
    dropped: int = 0

    @property
    def throughput(self) -> float:
        """Operations per second, one operation being one trace item processed under the protocol."""
        return self.ops / max(self.elapsed, TIMER_RESOLUTION)


def _time_write_only(est: FrequencyEstimator, items: Sequence[FlowKey]) -> ThroughputRun:
    record = est.record
    dropped = 0
    start = time.perf_counter()
    for key in items:
        try:
            record(key)
        except TableFullError:
            dropped += 1
    elapsed = time.perf_counter() - start
    return ThroughputRun(len(items), elapsed, dropped)


def _time_write_read(est: FrequencyEstimator, items: Sequence[FlowKey]) -> ThroughputRun:
    record, estimate = est.record, est.estimate
    dropped = 0
    start = time.perf_counter()
    for key in items:
        try:
            record(key)
        except TableFullError:
            dropped += 1
        estimate(key)
    elapsed = time.perf_counter() - start
    return ThroughputRun(len(items), elapsed, dropped)


def _time_read_only(est: FrequencyEstimator, items: Sequence[FlowKey]) -> ThroughputRun:
    record, estimate = est.record, est.estimate
    dropped = 0
    for key in items:
        try:
            record(key)
        except TableFullError:
            dropped += 1
    start = time.perf_counter()
    for key in items:
        estimate(key)
    elapsed = time.perf_counter() - start
    return ThroughputRun(len(items), elapsed, dropped)


_TIMERS: Dict[str, Callable[[FrequencyEstimator, Sequence[FlowKey]], ThroughputRun]] = {
    "write_only": _time_write_only,
    "write_read": _time_write_read,
    "read_only": _time_read_only,
}


def _throughput_runs(cfg: BenchConfig, trace: Trace, algorithm: str, protocol: str) -> List[ThroughputRun]:
    timer = _TIMERS[protocol]
    if cfg.warmup:
        timer(build_estimator(algorithm, cfg, trace.stats, cfg.seed), trace.items)
    runs = []
    for r in range(cfg.runs):
        est = build_estimator(algorithm, cfg, trace.stats, cfg.seed + r)
        runs.append(timer(est, trace.items))
    logger.info(
        " > %s %s: %.0f ops/s (mean of %d)",
        algorithm,
        protocol,
        np.mean([run.throughput for run in runs]),
        cfg.runs,
    )
    return runs


def bench_write_only(cfg: BenchConfig, trace: Trace, algorithm: str) -> List[ThroughputRun]:
    """Time one `record` per trace item."""
    return _throughput_runs(cfg, trace, algorithm, "write_only")


def bench_write_read(cfg: BenchConfig, trace: Trace, algorithm: str) -> List[ThroughputRun]:
    """Time one `record` immediately followed by an `estimate` of the same item, per trace item."""
    return _throughput_runs(cfg, trace, algorithm, "write_read")


def bench_read_only(cfg: BenchConfig, trace: Trace, algorithm: str) -> List[ThroughputRun]:
    """Record the whole trace untimed, then time one `estimate` per trace item."""
    return _throughput_runs(cfg, trace, algorithm, "read_only")


# ---------------------------------------------------------------------------- #
#                               Accuracy / memory                              #
# ---------------------------------------------------------------------------- #


def bench_accuracy(cfg: BenchConfig, trace: Trace, algorithm: str) -> List[Dict[str, ErrorReport]]:
    """Error reports of the three protocols per run, each protocol on a fresh estimator."""
    runs = []
    for r in range(cfg.runs):
        reports = {}
        for protocol in ERROR_PROTOCOLS:
            est = build_estimator(algorithm, cfg, trace.stats, cfg.seed + r)
            reports[protocol] = RUNNERS[protocol](trace.items, est)
        runs.append(reports)
    logger.info(" > %s accuracy over %d run(s)", algorithm, cfg.runs)
    return runs


@dataclass
class MemoryRun:
    memory_bytes: int
    entries: int
    stored_items: Optional[int]
    stored_space: Optional[int]
    dropped: int = 0


def bench_memory(cfg: BenchConfig, trace: Trace, algorithm: str) -> List[MemoryRun]:
    """Record the trace, then read the accounted memory, the stored entries and the space of those entries."""
    runs = []
    for r in range(cfg.runs):
        est = build_estimator(algorithm, cfg, trace.stats, cfg.seed + r)
        dropped = 0
        for key in trace.items:
            try:
                est.record(key)
            except TableFullError:
                dropped += 1
        stored = est.stored_items()
        space = None if stored is None else stored * est.entry_bytes
        runs.append(MemoryRun(est.memory_bytes(), est.allocated_entries(), stored, space, dropped))
    return runs


def aggregate(run_values: Sequence[float]) -> Tuple[float, float]:
    """Mean and 95% confidence half-width `1.96 * s / sqrt(n)`, `s` the sample standard deviation.

    Args:
        run_values (Sequence[float]): one value per run.

    Returns:
        Tuple[float, float]: `(mean, ci95_halfwidth)`, the half-width being 0 for a single run.
    """
    values = np.asarray(run_values, dtype=np.float64)
    if values.size == 0:
        raise ValueError(" [!] Can't aggregate an empty list of runs.")
    if not np.isfinite(values).all():
        raise ValueError(f" [!] Can't aggregate non-finite run values: {values.tolist()}.")
    mean = float(np.mean(values))
    if values.size == 1:
        return mean, 0.0
    return mean, float(1.96 * np.std(values, ddof=1) / math.sqrt(values.size))


# ---------------------------------------------------------------------------- #
#                                    Report                                    #
# ---------------------------------------------------------------------------- #


@dataclass
class ReportRow:
    algorithm: str
    trace: str
    protocol: str
    metric: str
    mean: Optional[float]
    ci95: Optional[float]
    runs: int
    units: str

    def sort_key(self):
        return (self.algorithm, self.protocol, self.metric, self.trace)


def _format(value: Optional[float]) -> str:
    if value is None:
        return NOT_APPLICABLE
    return f"{value:.10g}"


@dataclass
class BenchReport:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, algorithm: str, trace: str, protocol: str, metric: str, values: Sequence, units: str) -> None:
        """Aggregate one cell. A list of `None` values marks a metric that does not apply."""
        if all(v is None for v in values):
            mean, ci95 = None, None
        else:
            mean, ci95 = aggregate(values)
        self.rows.append(ReportRow(algorithm, trace, protocol, metric, mean, ci95, len(values), units))

    def sorted_rows(self) -> List[ReportRow]:
        return sorted(self.rows, key=ReportRow.sort_key)

    def write_csv(self, f: TextIO) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.sorted_rows():
            writer.writerow(
                [
                    row.algorithm,
                    row.trace,
                    row.protocol,
                    row.metric,
                    _format(row.mean),
                    _format(row.ci95),
                    row.runs,
                    row.units,
                ]
            )

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def save_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf8", newline="") as f:
            self.write_csv(f)


def add_throughput(report: BenchReport, algorithm: str, trace: Trace, protocol: str, runs: List[ThroughputRun]) -> None:
    report.add(algorithm, trace.label, protocol, "throughput", [r.throughput for r in runs], "ops/s")
    report.add(algorithm, trace.label, protocol, "dropped", [r.dropped for r in runs], "items")


def add_accuracy(report: BenchReport, algorithm: str, trace: Trace, runs: List[Dict[str, ErrorReport]]) -> None:
    for protocol in ERROR_PROTOCOLS:
        reports = [run[protocol] for run in runs]
        for metric in reports[0].metrics():
            units = "ratio" if metric == "avgrelerr" else "items"
            report.add(algorithm, trace.label, protocol, metric, [rep.metrics()[metric] for rep in reports], units)
        report.add(algorithm, trace.label, protocol, "dropped", [rep.dropped for rep in reports], "items")


def add_memory(report: BenchReport, algorithm: str, trace: Trace, runs: List[MemoryRun]) -> None:
    report.add(algorithm, trace.label, "memory", "memory_bytes", [r.memory_bytes for r in runs], "bytes")
    report.add(algorithm, trace.label, "memory", "entries", [r.entries for r in runs], "entries")
    report.add(algorithm, trace.label, "memory", "dropped", [r.dropped for r in runs], "items")
    report.add(algorithm, trace.label, "memory", "stored_items", [r.stored_items for r in runs], "items")
    report.add(algorithm, trace.label, "memory", "stored_space", [r.stored_space for r in runs], "bytes")


def run_command(command: str, cfg: BenchConfig, trace: Optional[Trace] = None) -> BenchReport:
    """Run every requested cell of `command` (`bench`, `accuracy` or `memory`) into one report."""
    if trace is None:
        trace = resolve_trace(cfg)
    report = BenchReport()
    for algorithm in cfg.algorithms():
        if command == "bench":
            for protocol in cfg.throughput_protocols():
                add_throughput(report, algorithm, trace, protocol, _throughput_runs(cfg, trace, algorithm, protocol))
        elif command == "accuracy":
            add_accuracy(report, algorithm, trace, bench_accuracy(cfg, trace, algorithm))
        elif command == "memory":
            add_memory(report, algorithm, trace, bench_memory(cfg, trace, algorithm))
        else:
            raise ValueError(f" [!] Unknown command '{command}'.")
    return report
