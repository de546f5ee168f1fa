"""Exact ground truth and the error metrics of the three evaluation protocols.

Every protocol yields MSRE as written (mean of the square root of the squared error, which equals the mean
absolute error), AVGERR, AVGRELERR and, as a supplement, the root of the mean squared error (RMSE).

- on arrival: after recording each item, query it against its running true count.
- per flow: after recording the whole stream, query every distinct flow once.
- postmortem: after recording the whole stream, query every occurrence again, in stream order.
"""
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from sketchpit.core import FlowKey, FrequencyEstimator, TableFullError

PROTOCOLS = ("on_arrival", "per_flow", "postmortem")
METRICS = ("msre", "avgerr", "avgrelerr", "rmse")


@dataclass
class GroundTruth:
    """Exact key to frequency map."""

    counts: Dict[FlowKey, int] = field(default_factory=dict)
    total_n: int = 0

    @classmethod
    def from_stream(cls, stream: Sequence[FlowKey]) -> "GroundTruth":
        return cls(counts=dict(Counter(stream)), total_n=len(stream))

    @property
    def uniques_m(self) -> int:
        return len(self.counts)

    def record(self, key: FlowKey) -> int:
        count = self.counts.get(key, 0) + 1
        self.counts[key] = count
        self.total_n += 1
        return count

    def count(self, key: FlowKey) -> int:
        return self.counts.get(key, 0)


@dataclass
class ErrorReport:
    protocol: str
    msre_as_written: float
    avgerr: float
    avgrelerr: float
    rmse: float
    dropped: int = 0

    def metrics(self) -> Dict[str, float]:
        """Metric name to value, names as in `METRICS`."""
        return {
            "msre": self.msre_as_written,
            "avgerr": self.avgerr,
            "avgrelerr": self.avgrelerr,
            "rmse": self.rmse,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def _report(protocol: str, true: np.ndarray, estimated: np.ndarray, dropped: int) -> ErrorReport:
    err = true - estimated
    squared = np.square(err)
    abs_err = np.abs(err)
    return ErrorReport(
        protocol=protocol,
        msre_as_written=float(np.mean(np.sqrt(squared))),
        avgerr=float(np.mean(abs_err)),
        avgrelerr=float(np.mean(abs_err / true)),
        rmse=float(np.sqrt(np.mean(squared))),
        dropped=dropped,
    )


def _check_stream(stream: Sequence[FlowKey]) -> None:
    if len(stream) == 0:
        raise ValueError(" [!] Error metrics need a non-empty stream.")


def _record_all(stream: Sequence[FlowKey], estimator: FrequencyEstimator) -> int:
    dropped = 0
    record = estimator.record
    for key in stream:
        try:
            record(key)
        except TableFullError:
            dropped += 1
    return dropped


def run_on_arrival(stream: Sequence[FlowKey], estimator: FrequencyEstimator) -> ErrorReport:
    """Record each item, then query it; its true frequency includes the current occurrence."""
    _check_stream(stream)
    n = len(stream)
    true = np.empty(n, dtype=np.float64)
    estimated = np.empty(n, dtype=np.float64)
    truth = GroundTruth()
    record, estimate = estimator.record, estimator.estimate
    dropped = 0
    for i, key in enumerate(stream):
        try:
            record(key)
        except TableFullError:
            dropped += 1
        true[i] = truth.record(key)
        estimated[i] = estimate(key)
    return _report("on_arrival", true, estimated, dropped)


def run_per_flow(
    stream: Sequence[FlowKey], estimator: FrequencyEstimator, flows: Optional[Iterable[FlowKey]] = None
) -> ErrorReport:
    """Record the stream, then query each distinct flow once (first-appearance order).

    Args:
        stream (Sequence[FlowKey]): items in arrival order.
        estimator (FrequencyEstimator): fresh estimator.
        flows (Iterable[FlowKey], optional): query only these flows, ignoring the ones absent from the stream.
            Defaults to every flow of the stream.
    """
    _check_stream(stream)
    dropped = _record_all(stream, estimator)
    truth = GroundTruth.from_stream(stream)
    keys = list(truth.counts) if flows is None else [k for k in dict.fromkeys(flows) if k in truth.counts]
    if not keys:
        raise ValueError(" [!] None of the requested flows appears in the stream.")
    true = np.fromiter((truth.counts[k] for k in keys), dtype=np.float64, count=len(keys))
    estimated = np.fromiter((estimator.estimate(k) for k in keys), dtype=np.float64, count=len(keys))
    return _report("per_flow", true, estimated, dropped)


def run_postmortem(stream: Sequence[FlowKey], estimator: FrequencyEstimator) -> ErrorReport:
    """Record the stream, then query every occurrence again against the final true frequencies."""
    _check_stream(stream)
    dropped = _record_all(stream, estimator)
    truth = GroundTruth.from_stream(stream)
    n = len(stream)
    true = np.fromiter((truth.counts[k] for k in stream), dtype=np.float64, count=n)
    estimated = np.fromiter((estimator.estimate(k) for k in stream), dtype=np.float64, count=n)
    return _report("postmortem", true, estimated, dropped)


RUNNERS = {"on_arrival": run_on_arrival, "per_flow": run_per_flow, "postmortem": run_postmortem}
