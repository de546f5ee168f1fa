import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

from coqpit import Coqpit, check_argument

from sketchpit.core import COUNTER_BYTES, IDENTIFIER_BYTES, Estimate, FlowKey, FrequencyEstimator, Seed, derive_seeds
from sketchpit.sampling import SkipSampler, scale_estimate

logger = logging.getLogger(__name__)

# the table doubles once it holds more than this fraction of its capacity
MAX_LOAD = 0.875


@dataclass
class HashConfig(Coqpit):
    """Exact counter table, optionally sampled (NitroHash).

    Args:
        mode (str): `exact` counts every occurrence, `nitro` counts each occurrence with probability `p`.
        p (float): sampling probability used in `nitro` mode. Ignored in `exact` mode.
        initial_capacity (int): accounted capacity of the empty table, doubled as the table fills.
    """

    mode: str = field(default="exact", metadata={"help": "exact or nitro"})
    p: float = field(default=1.0, metadata={"help": "sampling probability in nitro mode"})
    initial_capacity: int = field(default=8, metadata={"help": "initial accounted table capacity"})

    def check_values(self):
        c = asdict(self)
        check_argument("mode", c, restricted=True, enum_list=["exact", "nitro"])
        check_argument("p", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("initial_capacity", c, restricted=True, min_val=1)
        assert self.p > 0.0, " [!] p must be larger than 0."


class HashEstimator(FrequencyEstimator):
    """Counts occurrences in a hash table; in nitro mode only sampled occurrences reach the table.

    In nitro mode the sampler is consulted before the key is hashed, so a skipped occurrence costs no hash
    computation and no table access. Estimates are scaled by `1/p`.

    Args:
        config (HashConfig): estimator configuration.
        seed (Seed): seed of the sampler (nitro mode).
    """

    entry_bytes = IDENTIFIER_BYTES + COUNTER_BYTES

    def __init__(self, config: Optional[HashConfig] = None, seed: Seed = 0):
        self.config = config if config is not None else HashConfig()
        self.nitro = self.config.mode.lower() == "nitro"
        self.p = self.config.p if self.nitro else 1.0
        self.name = "nitrohash" if self.nitro else "hash"
        self.hash_invocations = 0
        self._table: Dict[FlowKey, int] = {}
        self._capacity = self.config.initial_capacity
        self._sampler = SkipSampler(self.p, derive_seeds(seed, 1)[0]) if self.nitro else None

    @property
    def capacity(self) -> int:
        return self._capacity

    def counts(self) -> Dict[FlowKey, int]:
        """Copy of the raw (unscaled) counters."""
        return dict(self._table)

    def record(self, key: FlowKey) -> None:
        if self._sampler is not None and not self._sampler.should_process():
            return
        self.hash_invocations += 1
        table = self._table
        if key in table:
            table[key] += 1
            return
        table[key] = 1
        if len(table) > self._capacity * MAX_LOAD:
            self._capacity *= 2
            logger.debug(" > hash table grown to %d entries", self._capacity)

    def estimate(self, key: FlowKey) -> Estimate:
        count = self._table.get(key, 0)
        if self.nitro and count:
            return scale_estimate(count, self.p)
        return count

    def memory_bytes(self) -> int:
        return self._capacity * self.entry_bytes

    def stored_items(self) -> int:
        return len(self._table)

    def __repr__(self):
        return f"HashEstimator(mode={self.config.mode}, p={self.p}, stored={len(self._table)})"
