"""Shared vocabulary of the sketches: flow keys, the estimator interface, seeding and hashing."""
import abc
from typing import Iterable, List, Optional, Union

import mmh3
import numpy as np

FlowKey = bytes
Estimate = Union[int, float]
Seed = int

# Accounting sizes used by `memory_bytes()`, independent of the Python object sizes.
COUNTER_BYTES = 4
IDENTIFIER_BYTES = 4
FINGERPRINT_BYTES = 8

PRNG_NAME = "PCG64"

_UINT64_MASK = (1 << 64) - 1


class TableFullError(RuntimeError):
    """A fixed-capacity estimator could not make room for a new key. The occurrence was dropped."""


def flow_key(value: Union[bytes, str, int]) -> FlowKey:
    """Canonicalize a flow identifier to its byte form.

    Args:
        value (Union[bytes, str, int]): raw identifier. `str` is UTF-8 encoded, `int` is written in decimal.

    Returns:
        FlowKey: non-empty byte string.
    """
    if isinstance(value, bytes):
        key = value
    elif isinstance(value, str):
        key = value.encode("utf-8")
    elif isinstance(value, int):
        key = str(value).encode("ascii")
    else:
        raise TypeError(f" [!] Can't make a flow key from type {type(value).__name__}")
    if not key:
        raise ValueError(" [!] Flow keys must be non-empty.")
    return key


def make_rng(seed: Seed) -> np.random.Generator:
    """Seeded generator used by every randomized component."""
    return np.random.Generator(np.random.PCG64(seed & _UINT64_MASK))


def derive_seeds(seed: Seed, n: int) -> List[int]:
    """Derive `n` independent 32-bit words from `seed` (hash seeds, sampler seeds, ...)."""
    state = np.random.SeedSequence(seed & _UINT64_MASK).generate_state(n, dtype=np.uint32)
    return [int(s) for s in state]


def hash64(key: bytes, seed: int) -> int:
    """Seeded unsigned 64-bit MurmurHash3 of `key`."""
    return mmh3.hash64(key, seed, signed=False)[0]


def hash128(key: bytes, seed: int):
    """Both unsigned 64-bit halves of the seeded MurmurHash3 x64-128 of `key`."""
    return mmh3.hash64(key, seed, signed=False)


class FrequencyEstimator(abc.ABC):
    """Interface of every frequency estimator.

    Implementations are single threaded. `estimate()` never mutates the estimator, so any number of
    queries between two `record()` calls leaves later answers unchanged.
    """

    name = "estimator"
    # accounted size of one stored entry
    entry_bytes = COUNTER_BYTES

    @abc.abstractmethod
    def record(self, key: FlowKey) -> None:
        """Process one stream occurrence of `key`."""

    @abc.abstractmethod
    def estimate(self, key: FlowKey) -> Estimate:
        """Return the non-negative frequency estimate of `key`."""

    @abc.abstractmethod
    def memory_bytes(self) -> int:
        """Size of the structure under the fixed accounting convention (4-byte counters and identifiers,
        8-byte fingerprints), not the allocator footprint."""

    def allocated_entries(self) -> int:
        """Number of entries (slots, counters or table cells) `memory_bytes()` accounts for."""
        return self.memory_bytes() // self.entry_bytes

    def stored_items(self) -> Optional[int]:
        """Number of distinct entries held, or `None` when the structure has a fixed number of cells."""
        return None

    def record_many(self, keys: Iterable[FlowKey]) -> None:
        for key in keys:
            self.record(key)
