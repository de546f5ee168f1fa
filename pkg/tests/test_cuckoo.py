import numpy as np
import pytest

from sketchpit.core import TableFullError
from sketchpit.cuckoo import CountingCuckooFilter, CuckooConfig
from sketchpit.metrics import GroundTruth
from sketchpit.trace import ZipfSpec, trace_zipf


def test_geometry():
    assert CuckooConfig(capacity_slots=1024).bucket_count() == 256
    assert CuckooConfig(capacity_slots=1000).bucket_count() == 256
    assert CuckooConfig(capacity_slots=1025).bucket_count() == 512
    assert CuckooConfig(capacity_slots=1024, capacity_scaling=0.01).bucket_count() == 4
    assert CuckooConfig(capacity_slots=1, slots_per_bucket=4).bucket_count() == 1

    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=1024))
    assert cf.slot_count == 1024
    assert cf.memory_bytes() == 1024 * 12
    assert cf.allocated_entries() == 1024
    assert cf.stored_items() == 0
    assert cf.load_factor() == 0


def test_config():
    with pytest.raises(AssertionError):
        CuckooConfig(fingerprint_bits=65)
    with pytest.raises(AssertionError):
        CuckooConfig(mode="counting")
    with pytest.raises(AssertionError):
        CuckooConfig(capacity_scaling=0.0)
    with pytest.raises(AssertionError):
        CuckooConfig(capacity_slots=0)


def test_names():
    assert CountingCuckooFilter(CuckooConfig(mode="plain")).name == "cuckoo"
    assert CountingCuckooFilter(CuckooConfig(mode="nitro", p=0.1)).name == "nitrocuckoo"
    nc_small = CountingCuckooFilter(CuckooConfig(capacity_slots=4096, mode="nitro", p=0.1, capacity_scaling=0.1))
    assert nc_small.name == "nc_small"
    assert nc_small.slot_count == 512


def _check_involution(n_keys, seed):
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=1 << 14), seed=seed)
    violations = 0
    for i in range(n_keys):
        i1, i2, fp = cf.index_pair(b"key-%d" % i)
        assert fp != 0
        violations += cf.alt_index(i2, fp) != i1 or cf.alt_index(i1, fp) != i2
    return violations


def test_xor_involution():
    assert _check_involution(100_000, seed=1) == 0


@pytest.mark.slow
def test_xor_involution_million_keys():
    assert _check_involution(1_000_000, seed=2) == 0


def test_exact_counts_with_wide_fingerprints():
    trace = trace_zipf(ZipfSpec(n_items=20_000, universe=5000, alpha=1.0, seed=4))
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=8192), seed=4)
    cf.record_many(trace.items)
    truth = GroundTruth.from_stream(trace.items)
    for key, f in truth.counts.items():
        assert cf.estimate(key) == f
    assert cf.stored_items() == truth.uniques_m
    assert cf.total_count() == trace.stats.n_items
    assert cf.load_factor() == pytest.approx(truth.uniques_m / 8192)
    assert cf.estimate(b"absent") == 0


def test_fill_to_eighty_percent():
    capacity = 4096
    for seed in range(10):
        cf = CountingCuckooFilter(CuckooConfig(capacity_slots=capacity, slots_per_bucket=4), seed=seed)
        for i in range(int(0.8 * capacity)):
            cf.record(b"%d-%d" % (seed, i))
        assert cf.load_factor() == pytest.approx(int(0.8 * capacity) / capacity)


def test_table_full_rolls_back():
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=4, slots_per_bucket=4, max_kicks=50), seed=0)
    keys = [b"a", b"b", b"c", b"d"]
    cf.record_many(keys)
    cf.record(b"a")
    with pytest.raises(TableFullError):
        cf.record(b"e")
    assert cf.stored_items() == 4
    assert cf.total_count() == 5
    assert [cf.estimate(k) for k in keys] == [2, 1, 1, 1]


def test_false_positive_rate():
    b, bits = 4, 16
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=131072, slots_per_bucket=b, fingerprint_bits=bits), seed=6)
    for i in range(100_000):
        cf.record(b"present-%d" % i)
    n_queries = 100_000
    false_positives = sum(cf.estimate(b"absent-%d" % i) > 0 for i in range(n_queries))
    assert false_positives / n_queries <= 2 * b * 2**-bits * 4


def test_nitro_scaling():
    p = 0.1
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=1024, mode="nitro", p=p), seed=8)
    for _ in range(5000):
        cf.record(b"heavy")
    raw = cf.total_count()
    assert 0 < raw < 5000
    assert cf.estimate(b"heavy") == pytest.approx(raw / p)
    assert cf.estimate(b"absent") == 0


def _mean_nitro_estimate(stream, key, p, capacity, seeds):
    estimates = []
    for seed in seeds:
        cf = CountingCuckooFilter(CuckooConfig(capacity_slots=capacity, mode="nitro", p=p), seed=seed)
        cf.record_many(stream)
        estimates.append(cf.estimate(key))
    return float(np.mean(estimates))


def test_nitro_unbiased():
    f = 10_000
    stream = [b"heavy"] * f + [b"light-%d" % i for i in range(1000)]
    assert _mean_nitro_estimate(stream, b"heavy", 0.01, 1024, range(200)) == pytest.approx(f, rel=0.05)


@pytest.mark.slow
def test_nitro_unbiased_rank_one_flow():
    trace = trace_zipf(ZipfSpec(n_items=1_000_000, universe=100_000, alpha=1.0, seed=0))
    f = trace.items.count(b"1")
    mean = _mean_nitro_estimate(trace.items, b"1", 0.01, trace.stats.n_items, range(200))
    assert mean == pytest.approx(f, rel=0.05)


def test_small_examples():
    single = CountingCuckooFilter(CuckooConfig(capacity_slots=4, slots_per_bucket=4), seed=3)
    assert single.bucket_count == 1
    assert all(single.index_pair(b"%d" % i)[:2] == (0, 0) for i in range(100))
    assert single.index_pair(b"a") == single.index_pair(b"a")

    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=64), seed=3)
    assert cf.estimate(b"a") == 0
    for _ in range(3):
        cf.record(b"a")
    assert cf.estimate(b"a") == 3
    assert (cf.stored_items(), cf.total_count()) == (1, 3)


def test_nitro_with_p_one_matches_plain():
    trace = trace_zipf(ZipfSpec(n_items=5000, universe=1000, alpha=1.0, seed=1))
    plain = CountingCuckooFilter(CuckooConfig(capacity_slots=2048), seed=5)
    nitro = CountingCuckooFilter(CuckooConfig(capacity_slots=2048, mode="nitro", p=1.0), seed=5)
    plain.record_many(trace.items)
    nitro.record_many(trace.items)
    keys = set(trace.items)
    assert [plain.estimate(k) for k in keys] == [nitro.estimate(k) for k in keys]
    assert plain.stored_items() == nitro.stored_items()


def test_same_fingerprint_and_buckets_share_a_counter():
    cf = CountingCuckooFilter(CuckooConfig(capacity_slots=16, fingerprint_bits=4), seed=2)
    seen = {}
    for i in range(1000):
        key = b"k%d" % i
        triple = cf.index_pair(key)
        if triple in seen:
            a, b = seen[triple], key
            break
        seen[triple] = key
    else:
        pytest.fail("no aliasing pair among 1000 keys")
    for key in (a, a, b):
        cf.record(key)
    assert cf.estimate(a) == cf.estimate(b) == 3
    assert cf.stored_items() == 1
