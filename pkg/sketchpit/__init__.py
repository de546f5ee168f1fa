from sketchpit.bench import (
    ALGORITHMS,
    BenchConfig,
    BenchReport,
    aggregate,
    bench_accuracy,
    bench_memory,
    bench_read_only,
    bench_write_only,
    bench_write_read,
    build_estimator,
)
from sketchpit.cms import CmsConfig, CountMinSketch, cms_dims
from sketchpit.core import FlowKey, FrequencyEstimator, TableFullError, flow_key
from sketchpit.cuckoo import CountingCuckooFilter, CuckooConfig
from sketchpit.exact_hash import HashConfig, HashEstimator
from sketchpit.metrics import ErrorReport, GroundTruth, run_on_arrival, run_per_flow, run_postmortem
from sketchpit.sampling import SkipSampler, scale_estimate
from sketchpit.space_saving import SpaceSaving, SpaceSavingConfig
from sketchpit.trace import (
    Trace,
    TraceFormatError,
    TraceStats,
    ZipfSpec,
    trace_load,
    trace_prefix,
    trace_save,
    trace_zipf,
)
