import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from coqpit import Coqpit, check_argument

from sketchpit.core import COUNTER_BYTES, IDENTIFIER_BYTES, Estimate, FlowKey, FrequencyEstimator, Seed, make_rng

logger = logging.getLogger(__name__)


@dataclass
class SpaceSavingConfig(Coqpit):
    """Space Saving configuration.

    Args:
        epsilon (float): error parameter, the budget is `ceil(1 / epsilon)` unless `budget` is set.
        budget (int): number of tracked entries `M`. Defaults to None.
        mode (str): `plain` always admits untracked items, `rap` admits them with probability `1 / (C_m + 1)`.
    """

    epsilon: float = field(default=0.01, metadata={"help": "error parameter"})
    budget: int = field(default=None, metadata={"help": "entry budget M, overrides epsilon"})
    mode: str = field(default="plain", metadata={"help": "plain or rap"})

    def check_values(self):
        c = asdict(self)
        check_argument("epsilon", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("budget", c, restricted=True, min_val=1, allow_none=True)
        check_argument("mode", c, restricted=True, enum_list=["plain", "rap"])
        assert self.epsilon > 0.0, " [!] epsilon must be larger than 0."

    def entry_budget(self) -> int:
        if self.budget:
            return self.budget
        return max(1, math.ceil(1.0 / self.epsilon - 1e-9))


class _IndexedMinHeap:
    """Binary min-heap of `[count, stamp, key]` entries with a key to position index.

    Entries are ordered by `(count, stamp)`; stamps are unique, so the order is total and the root is the
    minimal counter admitted earliest.
    """

    def __init__(self):
        self.heap: List[list] = []
        self.pos: Dict[FlowKey, int] = {}

    def __len__(self):
        return len(self.heap)

    @staticmethod
    def _less(a: list, b: list) -> bool:
        return a[0] < b[0] or (a[0] == b[0] and a[1] < b[1])

    def _swap(self, i: int, j: int) -> None:
        heap, pos = self.heap, self.pos
        heap[i], heap[j] = heap[j], heap[i]
        pos[heap[i][2]] = i
        pos[heap[j][2]] = j

    def _sift_up(self, i: int) -> None:
        heap = self.heap
        while i > 0:
            parent = (i - 1) >> 1
            if not self._less(heap[i], heap[parent]):
                break
            self._swap(i, parent)
            i = parent

    def _sift_down(self, i: int) -> None:
        heap = self.heap
        n = len(heap)
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            if child + 1 < n and self._less(heap[child + 1], heap[child]):
                child += 1
            if not self._less(heap[child], heap[i]):
                break
            self._swap(i, child)
            i = child

    def push(self, key: FlowKey, count: int, stamp: int) -> None:
        self.heap.append([count, stamp, key])
        self.pos[key] = len(self.heap) - 1
        self._sift_up(len(self.heap) - 1)

    def increment(self, i: int) -> None:
        self.heap[i][0] += 1
        self._sift_down(i)

    def min_count(self) -> int:
        return self.heap[0][0]

    def replace_min(self, key: FlowKey, count: int, stamp: int) -> FlowKey:
        """Evict the root, insert `key` in its place and return the evicted key."""
        evicted = self.heap[0][2]
        del self.pos[evicted]
        self.heap[0] = [count, stamp, key]
        self.pos[key] = 0
        self._sift_down(0)
        return evicted


class SpaceSaving(FrequencyEstimator):
    """Space Saving over a budget of `M` entries, optionally with random admission (RAP).

    An untracked item arriving at a full table takes over a minimal entry and increments its counter
    `C_m` without resetting it. In `rap` mode this takeover happens only with probability `1 / (C_m + 1)`,
    one PRNG draw per such arrival; tracked arrivals never touch the PRNG. Untracked keys are estimated
    by the minimal counter.

    Args:
        config (SpaceSavingConfig): estimator configuration.
        seed (Seed): seed of the admission coin (`rap` mode).
    """

    entry_bytes = IDENTIFIER_BYTES + COUNTER_BYTES

    def __init__(self, config: Optional[SpaceSavingConfig] = None, seed: Seed = 0):
        self.config = config if config is not None else SpaceSavingConfig()
        self.budget = self.config.entry_budget()
        self.rap = self.config.mode.lower() == "rap"
        self.name = "spacesaving_rap" if self.rap else "spacesaving"
        self.items_seen = 0
        self._heap = _IndexedMinHeap()
        self._stamp = 0
        self._rng = make_rng(seed) if self.rap else None
        logger.debug(" > space saving %s with M=%d", self.config.mode, self.budget)

    def record(self, key: FlowKey) -> None:
        self.items_seen += 1
        heap = self._heap
        i = heap.pos.get(key)
        if i is not None:
            heap.increment(i)
            return
        self._stamp += 1
        if len(heap) < self.budget:
            heap.push(key, 1, self._stamp)
            return
        c_min = heap.min_count()
        if self.rap and self._rng.random() >= 1.0 / (c_min + 1):
            return
        heap.replace_min(key, c_min + 1, self._stamp)

    def estimate(self, key: FlowKey) -> Estimate:
        heap = self._heap
        i = heap.pos.get(key)
        if i is not None:
            return heap.heap[i][0]
        return self.min_count()

    def min_count(self) -> int:
        """Minimal tracked counter, 0 for an empty table."""
        if not self._heap.heap:
            return 0
        return self._heap.min_count()

    def entries(self) -> Dict[FlowKey, int]:
        return {entry[2]: entry[0] for entry in self._heap.heap}

    def memory_bytes(self) -> int:
        return self.budget * self.entry_bytes

    def __repr__(self):
        return f"SpaceSaving(mode={self.config.mode}, M={self.budget}, tracked={len(self._heap)})"
