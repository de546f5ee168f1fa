import math

import numpy as np
import pytest

from sketchpit.cms import CmsConfig, CountMinSketch, cms_dims
from sketchpit.metrics import GroundTruth, run_per_flow
from sketchpit.trace import ZipfSpec, trace_zipf


def test_cms_dims():
    assert cms_dims(0.01, 0.01) == (272, 5)
    assert cms_dims(0.1, 1 / math.e) == (28, 1)
    for epsilon, delta in ((0.0, 0.01), (1.0, 0.01), (0.01, 0.0), (0.01, 1.0), (-0.5, 0.5)):
        with pytest.raises(ValueError):
            cms_dims(epsilon, delta)


def test_config():
    assert CmsConfig().dims() == (272, 5)
    assert CmsConfig(w=1000, d=3).dims() == (1000, 3)
    with pytest.raises(AssertionError):
        CmsConfig(mode="sketchy")
    with pytest.raises(AssertionError):
        CmsConfig(epsilon=0.0)
    with pytest.raises(AssertionError):
        CmsConfig(w=0)


def test_single_row():
    cms = CountMinSketch(CmsConfig(w=1 << 16, d=1, mode="plain"), seed=0)
    for key in (b"a", b"a", b"b"):
        cms.record(key)
    assert cms.estimate(b"a") == 2
    assert cms.estimate(b"b") == 1


def test_total_collision():
    cms = CountMinSketch(CmsConfig(w=1, d=1, mode="plain"), seed=0)
    for key in (b"a", b"a", b"b"):
        cms.record(key)
    assert [cms.estimate(k) for k in (b"a", b"b", b"zzz")] == [3, 3, 3]


def test_conservative_update_raises_only_minimal_counters():
    cms = CountMinSketch(CmsConfig(w=1 << 16, d=3), seed=4)
    rows, cols = np.arange(3), cms.columns(b"a")
    cms.counters[rows, cols] = [2, 5, 5]
    cms.record(b"a")
    assert cms.counters[rows, cols].tolist() == [3, 5, 5]
    assert cms.estimate(b"a") == 3
    cms.record(b"a")
    assert cms.counters[rows, cols].tolist() == [4, 5, 5]


def test_memory():
    cms = CountMinSketch(CmsConfig(epsilon=0.01, delta=0.01))
    assert (cms.w, cms.d) == (272, 5)
    assert cms.memory_bytes() == 5440
    assert cms.allocated_entries() == 272 * 5
    assert cms.stored_items() is None
    assert [CountMinSketch(CmsConfig(mode=m)).name for m in ("conservative", "plain", "nitro")] == [
        "cms",
        "cms_nomi",
        "nitrocms",
    ]


def _zipf(n=100_000, seed=3):
    return trace_zipf(ZipfSpec(n_items=n, universe=50_000, alpha=1.0, seed=seed))


def test_one_sided_and_bounded():
    trace = _zipf()
    truth = GroundTruth.from_stream(trace.items)
    n = trace.stats.n_items
    for mode in ("conservative", "plain"):
        cms = CountMinSketch(CmsConfig(epsilon=0.01, delta=0.01, mode=mode), seed=11)
        cms.record_many(trace.items)
        errors = np.array([cms.estimate(k) - f for k, f in truth.counts.items()])
        assert errors.min() >= 0, mode
        assert np.mean(errors > 0.01 * n) <= 2 * 0.01, mode


def test_conservative_update_dominated_by_plain():
    trace = _zipf(n=30_000)
    conservative = CountMinSketch(CmsConfig(mode="conservative"), seed=5)
    plain = CountMinSketch(CmsConfig(mode="plain"), seed=5)
    conservative.record_many(trace.items)
    plain.record_many(trace.items)
    for key in set(trace.items):
        assert conservative.estimate(key) <= plain.estimate(key)
    assert (conservative.counters <= plain.counters).all()
    # plain adds each item to every row, conservative to at most every row
    assert (plain.counters.sum(axis=1) == trace.stats.n_items).all()
    assert (conservative.counters.sum(axis=1) <= trace.stats.n_items).all()


def test_nitro_with_p_one_matches_plain():
    trace = _zipf(n=5000)
    plain = CountMinSketch(CmsConfig(mode="plain"), seed=9)
    nitro = CountMinSketch(CmsConfig(mode="nitro", p=1.0), seed=9)
    plain.record_many(trace.items)
    nitro.record_many(trace.items)
    assert np.array_equal(plain.counters, nitro.counters)


def test_nitro_scaling():
    p = 0.05
    trace = _zipf(n=50_000)
    cms = CountMinSketch(CmsConfig(mode="nitro", p=p), seed=2)
    cms.record_many(trace.items)
    total = int(cms.counters.sum())
    expected = p * cms.d * trace.stats.n_items
    assert abs(total - expected) < 0.05 * expected
    for key in (b"1", b"2", b"3", b"49999"):
        raw = int(cms.counters[np.arange(cms.d), cms.columns(key)].min())
        assert cms.estimate(key) == pytest.approx(raw / p)


@pytest.mark.slow
def test_conservative_update_error_ratio():
    trace = _zipf(n=1_000_000)
    config = dict(w=272, d=5)
    plain = run_per_flow(trace.items, CountMinSketch(CmsConfig(mode="plain", **config), seed=1))
    conservative = run_per_flow(trace.items, CountMinSketch(CmsConfig(mode="conservative", **config), seed=1))
    assert plain.avgerr / conservative.avgerr >= 1.5
