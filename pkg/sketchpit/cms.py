import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from coqpit import Coqpit, check_argument

from sketchpit.core import COUNTER_BYTES, Estimate, FlowKey, FrequencyEstimator, Seed, derive_seeds, hash64
from sketchpit.sampling import SkipSampler, scale_estimate

logger = logging.getLogger(__name__)

# absorbs float noise so that exact ratios such as ln(1/(1/e)) do not round up one step too far
_CEIL_SLACK = 1e-9


def cms_dims(epsilon: float, delta: float) -> Tuple[int, int]:
    """Dimensions of a Count-Min Sketch with error `epsilon * N` with probability `1 - delta`.

    Args:
        epsilon (float): accuracy parameter in (0, 1).
        delta (float): failure probability in (0, 1).

    Returns:
        Tuple[int, int]: `(w, d) = (ceil(e / epsilon), ceil(ln(1 / delta)))`.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f" [!] epsilon must be in (0, 1), got {epsilon}.")
    if not 0.0 < delta < 1.0:
        raise ValueError(f" [!] delta must be in (0, 1), got {delta}.")
    w = math.ceil(math.e / epsilon - _CEIL_SLACK)
    d = math.ceil(-math.log(delta) - _CEIL_SLACK)
    return max(1, w), max(1, d)


@dataclass
class CmsConfig(Coqpit):
    """Count-Min Sketch configuration.

    `w` and `d` are derived from `epsilon` and `delta` unless both are set explicitly.

    Args:
        epsilon (float): accuracy parameter.
        delta (float): failure probability.
        w (int): counters per row. Defaults to None.
        d (int): number of rows. Defaults to None.
        mode (str): `conservative` (minimal increment), `plain` (every mapped counter) or `nitro`
            (each mapped counter with probability `p`).
        p (float): sampling probability in `nitro` mode.
    """

    epsilon: float = field(default=0.01, metadata={"help": "accuracy parameter"})
    delta: float = field(default=0.01, metadata={"help": "failure probability"})
    w: int = field(default=None, metadata={"help": "counters per row, overrides epsilon"})
    d: int = field(default=None, metadata={"help": "number of rows, overrides delta"})
    mode: str = field(default="conservative", metadata={"help": "conservative, plain or nitro"})
    p: float = field(default=1.0, metadata={"help": "sampling probability in nitro mode"})

    def check_values(self):
        c = asdict(self)
        check_argument("epsilon", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("delta", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("w", c, restricted=True, min_val=1, allow_none=True)
        check_argument("d", c, restricted=True, min_val=1, allow_none=True)
        check_argument("mode", c, restricted=True, enum_list=["conservative", "plain", "nitro"])
        check_argument("p", c, restricted=True, min_val=0.0, max_val=1.0)
        assert 0.0 < self.epsilon < 1.0, " [!] epsilon must be in (0, 1)."
        assert 0.0 < self.delta < 1.0, " [!] delta must be in (0, 1)."
        assert self.p > 0.0, " [!] p must be larger than 0."

    def dims(self) -> Tuple[int, int]:
        w, d = cms_dims(self.epsilon, self.delta)
        return (self.w or w, self.d or d)


class CountMinSketch(FrequencyEstimator):
    """`d x w` grid of counters, one seeded hash function per row.

    Rows hash the key independently (one hash evaluation per row). Pairwise independence of the rows is
    approximated by independent seeds.

    In nitro mode the `d` mapped counters of an item are `d` consecutive potential updates of a single
    sampler, so skips run across item boundaries and with `p < 1/d` most items touch no counter at all.
    Counters keep raw sample counts; queries scale the row minimum by `1/p`.

    Args:
        config (CmsConfig): sketch configuration.
        seed (Seed): seed of the row hashes and of the sampler.
    """

    def __init__(self, config: Optional[CmsConfig] = None, seed: Seed = 0):
        self.config = config if config is not None else CmsConfig()
        self.mode = self.config.mode.lower()
        self.w, self.d = self.config.dims()
        self.p = self.config.p if self.mode == "nitro" else 1.0
        self.name = {"conservative": "cms", "plain": "cms_nomi", "nitro": "nitrocms"}[self.mode]
        seeds = derive_seeds(seed, self.d + 1)
        self.row_seeds: List[int] = seeds[: self.d]
        self.counters = np.zeros((self.d, self.w), dtype=np.int64)
        self._rows = np.arange(self.d)
        self._sampler = SkipSampler(self.p, seeds[self.d]) if self.mode == "nitro" else None
        logger.debug(" > CMS %s with w=%d, d=%d", self.mode, self.w, self.d)

    def columns(self, key: FlowKey) -> np.ndarray:
        """Mapped column of `key` in every row."""
        w = self.w
        return np.array([hash64(key, s) % w for s in self.row_seeds], dtype=np.int64)

    def record(self, key: FlowKey) -> None:
        if self._sampler is not None:
            sampler = self._sampler
            for row, row_seed in enumerate(self.row_seeds):
                if sampler.should_process():
                    self.counters[row, hash64(key, row_seed) % self.w] += 1
            return
        cols = self.columns(key)
        if self.mode == "plain":
            self.counters[self._rows, cols] += 1
            return
        values = self.counters[self._rows, cols]
        hit = values == values.min()
        self.counters[self._rows[hit], cols[hit]] += 1

    def estimate(self, key: FlowKey) -> Estimate:
        raw = int(self.counters[self._rows, self.columns(key)].min())
        if self._sampler is not None and raw:
            return scale_estimate(raw, self.p)
        return raw

    def memory_bytes(self) -> int:
        return self.w * self.d * COUNTER_BYTES

    def __repr__(self):
        return f"CountMinSketch(mode={self.mode}, w={self.w}, d={self.d}, p={self.p})"
