import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

from coqpit import Coqpit, check_argument

from sketchpit.core import (
    COUNTER_BYTES,
    FINGERPRINT_BYTES,
    Estimate,
    FlowKey,
    FrequencyEstimator,
    Seed,
    TableFullError,
    derive_seeds,
    hash64,
    hash128,
    make_rng,
)
from sketchpit.sampling import SkipSampler, scale_estimate

logger = logging.getLogger(__name__)

EMPTY = 0


@dataclass
class CuckooConfig(Coqpit):
    """Counting Cuckoo filter configuration.

    Args:
        capacity_slots (int): requested number of slots before scaling and rounding.
        slots_per_bucket (int): slots per bucket `b`.
        fingerprint_bits (int): fingerprint length `L`, at most 64.
        max_kicks (int): bound on the eviction chain of one insertion.
        mode (str): `plain` or `nitro`.
        p (float): sampling probability in `nitro` mode.
        capacity_scaling (float): factor applied to `capacity_slots`. NC-SMALL sets it to `p`.
    """

    capacity_slots: int = field(default=1024, metadata={"help": "requested number of slots"})
    slots_per_bucket: int = field(default=4, metadata={"help": "slots per bucket"})
    fingerprint_bits: int = field(default=64, metadata={"help": "fingerprint length in bits"})
    max_kicks: int = field(default=500, metadata={"help": "eviction chain bound"})
    mode: str = field(default="plain", metadata={"help": "plain or nitro"})
    p: float = field(default=1.0, metadata={"help": "sampling probability in nitro mode"})
    capacity_scaling: float = field(default=1.0, metadata={"help": "capacity multiplier, p for NC-SMALL"})

    def check_values(self):
        c = asdict(self)
        check_argument("capacity_slots", c, restricted=True, min_val=1)
        check_argument("slots_per_bucket", c, restricted=True, min_val=1)
        check_argument("fingerprint_bits", c, restricted=True, min_val=1, max_val=64)
        check_argument("max_kicks", c, restricted=True, min_val=1)
        check_argument("mode", c, restricted=True, enum_list=["plain", "nitro"])
        check_argument("p", c, restricted=True, min_val=0.0, max_val=1.0)
        check_argument("capacity_scaling", c, restricted=True, min_val=0.0, max_val=1.0)
        assert self.p > 0.0, " [!] p must be larger than 0."
        assert self.capacity_scaling > 0.0, " [!] capacity_scaling must be larger than 0."

    def bucket_count(self) -> int:
        """Number of buckets, `capacity_slots * capacity_scaling / b` rounded up to a power of two."""
        slots = max(1, math.ceil(self.capacity_slots * self.capacity_scaling))
        buckets = math.ceil(slots / self.slots_per_bucket)
        return 1 << max(0, (buckets - 1).bit_length())


class CountingCuckooFilter(FrequencyEstimator):
    """Cuckoo filter whose slots hold a (fingerprint, counter) pair.

    Partial-key cuckoo hashing places a key in bucket `i1 = h1(key)` or `i2 = i1 XOR h1(fp)`; the bucket count
    is a power of two so the XOR relation is an involution under masking and an evicted fingerprint finds its
    alternate bucket without the key. Fingerprint 0 marks an empty slot.

    Two keys sharing both the fingerprint and the bucket pair share a counter, which is the only way an
    estimate can exceed the true count.

    Args:
        config (CuckooConfig): filter configuration.
        seed (Seed): seed of the hashes, the eviction victim choice and the sampler.
    """

    entry_bytes = FINGERPRINT_BYTES + COUNTER_BYTES

    def __init__(self, config: Optional[CuckooConfig] = None, seed: Seed = 0):
        self.config = config if config is not None else CuckooConfig()
        self.nitro = self.config.mode.lower() == "nitro"
        self.p = self.config.p if self.nitro else 1.0
        if not self.nitro:
            self.name = "cuckoo"
        elif self.config.capacity_scaling < 1.0:
            self.name = "nc_small"
        else:
            self.name = "nitrocuckoo"
        self.b = self.config.slots_per_bucket
        self.max_kicks = self.config.max_kicks
        self._buckets = self.config.bucket_count()
        self._bucket_mask = self._buckets - 1
        self._fp_mask = (1 << self.config.fingerprint_bits) - 1
        self._index_seed, victim_seed, sampler_seed = derive_seeds(seed, 3)
        self._rng = make_rng(victim_seed)
        self._sampler = SkipSampler(self.p, sampler_seed) if self.nitro else None
        slots = self._buckets * self.b
        self._fps = [EMPTY] * slots
        self._counts = [0] * slots
        self._occupied = 0
        logger.debug(" > cuckoo filter with %d buckets of %d slots", self._buckets, self.b)

    @property
    def bucket_count(self) -> int:
        return self._buckets

    @property
    def slot_count(self) -> int:
        return self._buckets * self.b

    def load_factor(self) -> float:
        return self._occupied / self.slot_count

    def total_count(self) -> int:
        return sum(self._counts)

    def _fp_hash(self, fp: int) -> int:
        return hash64(fp.to_bytes(8, "little"), self._index_seed)

    def alt_index(self, index: int, fp: int) -> int:
        return (index ^ self._fp_hash(fp)) & self._bucket_mask

    def index_pair(self, key: FlowKey) -> Tuple[int, int, int]:
        """Candidate buckets and fingerprint of `key`.

        Returns:
            Tuple[int, int, int]: `(i1, i2, fp)` with a non-zero `fp`.
        """
        low, high = hash128(key, self._index_seed)
        fp = (high & self._fp_mask) or 1
        i1 = low & self._bucket_mask
        return i1, self.alt_index(i1, fp), fp

    def _find(self, bucket: int, fp: int) -> int:
        fps = self._fps
        start = bucket * self.b
        for slot in range(start, start + self.b):
            if fps[slot] == fp:
                return slot
        return -1

    def _free_slot(self, bucket: int) -> int:
        return self._find(bucket, EMPTY)

    def _place(self, slot: int, fp: int, count: int) -> None:
        self._fps[slot] = fp
        self._counts[slot] = count
        self._occupied += 1

    def record(self, key: FlowKey) -> None:
        if self._sampler is not None and not self._sampler.should_process():
            return
        i1, i2, fp = self.index_pair(key)
        slot = self._find(i1, fp)
        if slot < 0:
            slot = self._find(i2, fp)
        if slot >= 0:
            self._counts[slot] += 1
            return
        self._insert(i1, i2, fp)

    def _insert(self, i1: int, i2: int, fp: int) -> None:
        for bucket in (i1, i2):
            slot = self._free_slot(bucket)
            if slot >= 0:
                self._place(slot, fp, 1)
                return

        fps, counts = self._fps, self._counts
        count = 1
        bucket = i2
        path = []
        for _ in range(self.max_kicks):
            slot = bucket * self.b + int(self._rng.integers(self.b))
            path.append(slot)
            fp, fps[slot] = fps[slot], fp
            count, counts[slot] = counts[slot], count
            bucket = self.alt_index(bucket, fp)
            free = self._free_slot(bucket)
            if free >= 0:
                self._place(free, fp, count)
                return

        # undo the chain so the table holds exactly what it held before this insertion
        for slot in reversed(path):
            fp, fps[slot] = fps[slot], fp
            count, counts[slot] = counts[slot], count
        logger.debug(" [!] cuckoo insertion failed at load factor %.3f", self.load_factor())
        raise TableFullError(
            f" [!] Cuckoo filter is full after {self.max_kicks} kicks ({self._occupied}/{self.slot_count} slots)."
        )

    def estimate(self, key: FlowKey) -> Estimate:
        i1, i2, fp = self.index_pair(key)
        slot = self._find(i1, fp)
        if slot < 0:
            slot = self._find(i2, fp)
            if slot < 0:
                return 0
        count = self._counts[slot]
        if self.nitro:
            return scale_estimate(count, self.p)
        return count

    def memory_bytes(self) -> int:
        return self.slot_count * self.entry_bytes

    def stored_items(self) -> int:
        return self._occupied

    def __repr__(self):
        return (
            f"CountingCuckooFilter(mode={self.config.mode}, p={self.p}, buckets={self._buckets}, "
            f"b={self.b}, L={self.config.fingerprint_bits})"
        )
