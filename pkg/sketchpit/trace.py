"""Traces: resident key sequences loaded from files or generated from a seeded Zipf law."""
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from coqpit import Coqpit, check_argument

from sketchpit.core import FlowKey, make_rng

logger = logging.getLogger(__name__)


class TraceFormatError(ValueError):
    """Malformed trace content. `line` is 1-based, 0 when the whole file is at fault."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class TraceStats:
    n_items: int
    n_uniques: int


@dataclass(frozen=True)
class Trace:
    """Immutable, fully resident sequence of flow keys."""

    items: Tuple[FlowKey, ...]
    stats: TraceStats
    name: str = "trace"

    def __len__(self):
        return len(self.items)

    @property
    def label(self) -> str:
        """Trace name with its length, used to tag report rows."""
        return f"{self.name}[{self.stats.n_items}]"


def _make_trace(items: Sequence[FlowKey], name: str) -> Trace:
    items = tuple(items)
    if not items:
        raise TraceFormatError(" [!] Empty trace.")
    return Trace(items=items, stats=TraceStats(n_items=len(items), n_uniques=len(set(items))), name=name)


@dataclass
class ZipfSpec(Coqpit):
    """Synthetic trace description: key `i` in `[1, universe]` drawn with probability proportional to `1/i^alpha`.

    Args:
        n_items (int): trace length.
        universe (int): key-space size.
        alpha (float): skew exponent.
        seed (int): generator seed.
    """

    n_items: int = field(default=100000, metadata={"help": "trace length"})
    universe: int = field(default=10000, metadata={"help": "key-space size"})
    alpha: float = field(default=1.0, metadata={"help": "skew exponent"})
    seed: int = field(default=0, metadata={"help": "generator seed"})

    def check_values(self):
        c = asdict(self)
        check_argument("n_items", c, restricted=True, min_val=1)
        check_argument("universe", c, restricted=True, min_val=1)
        check_argument("seed", c, restricted=True, min_val=0)
        if self.alpha < 0:
            raise ValueError(f" [!] Zipf exponent must be non-negative, got {self.alpha}.")

    @classmethod
    def parse(cls, text: str) -> "ZipfSpec":
        """Parse the `n,universe,alpha,seed` command-line form."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f" [!] Expected 'n,universe,alpha,seed', got '{text}'.")
        n, universe, alpha, seed = parts
        return cls(n_items=int(float(n)), universe=int(float(universe)), alpha=float(alpha), seed=int(seed))

    @property
    def name(self) -> str:
        return f"zipf-a{self.alpha:g}-u{self.universe}-s{self.seed}"


def trace_zipf(spec: ZipfSpec) -> Trace:
    """Sample a Zipf trace by inverse CDF over precomputed cumulative weights.

    The sequence depends only on `spec`: uniforms come from a PCG64 generator seeded with `spec.seed` and
    are mapped to ranks by binary search in the cumulative weights. Keys are the decimal ranks.
    """
    if spec.alpha < 0:
        raise ValueError(f" [!] Zipf exponent must be non-negative, got {spec.alpha}.")
    ranks = np.arange(1, spec.universe + 1, dtype=np.float64)
    cdf = np.cumsum(ranks**-spec.alpha)
    cdf /= cdf[-1]
    u = make_rng(spec.seed).random(spec.n_items)
    drawn = np.minimum(np.searchsorted(cdf, u, side="right"), spec.universe - 1) + 1
    vocab = [str(i).encode("ascii") for i in range(spec.universe + 1)]
    items = [vocab[i] for i in drawn.tolist()]
    logger.info(" > generated %s with %d items", spec.name, spec.n_items)
    return _make_trace(items, spec.name)


def trace_load(path: str) -> Trace:
    """Load a one-key-per-line trace file.

    Lines are UTF-8, terminated by LF or CRLF; the last line may lack a terminator. Blank lines are rejected.

    Args:
        path (str): trace file.

    Returns:
        Trace: resident trace named after the file.
    """
    with open(path, "rb") as f:
        data = f.read()
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    items: List[FlowKey] = []
    for line_no, line in enumerate(lines, start=1):
        if line.endswith(b"\r"):
            line = line[:-1]
        if not line:
            raise TraceFormatError(f" [!] {path}:{line_no}: blank line.", line_no)
        try:
            line.decode("utf-8")
        except UnicodeDecodeError as e:
            raise TraceFormatError(f" [!] {path}:{line_no}: not valid UTF-8.", line_no) from e
        items.append(line)
    if not items:
        raise TraceFormatError(f" [!] {path}: empty trace.")
    name = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    logger.info(" > loaded %s with %d items", name, len(items))
    return _make_trace(items, name)


def trace_save(trace: Trace, path: str) -> None:
    with open(path, "wb") as f:
        for key in trace.items:
            f.write(key)
            f.write(b"\n")


def trace_prefix(trace: Trace, k: int) -> Trace:
    """First `k` items of `trace` with recomputed statistics."""
    if not 1 <= k <= trace.stats.n_items:
        raise ValueError(f" [!] Prefix length must be in [1, {trace.stats.n_items}], got {k}.")
    if k == trace.stats.n_items:
        return trace
    return _make_trace(trace.items[:k], trace.name)
