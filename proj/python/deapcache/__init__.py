"""Trace-driven cache policy laboratory.

Learned admission, neural prefetching, and adaptive eviction simulated
against classical baselines (LRU, LFU, FIFO, LIFO, Belady).
"""

from ._core import (
    NEVER_USED,
    BatchPoint,
    ConfigError,
    EmptyTraceError,
    Error,
    FormatError,
    IoError,
    KdeWindow,
    LabeledTrace,
    Losses,
    Model,
    ModelDims,
    NumericError,
    ParseError,
    PolicyStats,
    RunConfig,
    ShapeError,
    SimConfig,
    SimulationReport,
    TraceRecord,
    TrainConfig,
    __version__,
    address_embedding,
    admit,
    bandwidth_silverman,
    decode_future,
    distribution_vector,
    init_model,
    kde_density,
    label_trace,
    load_checkpoint,
    load_config,
    load_trace,
    make_model,
    prefetch_forward,
    pretrain,
    recompose,
    report,
    report_to_csv,
    report_to_json,
    run_baseline,
    run_simulation,
    save_checkpoint,
    select_prefetch_candidates,
    simulate,
    step_embedding,
    synth_trace,
    tokenize,
    train,
    train_model,
)

__all__ = [
    "NEVER_USED",
    "BatchPoint",
    "ConfigError",
    "EmptyTraceError",
    "Error",
    "FormatError",
    "IoError",
    "KdeWindow",
    "LabeledTrace",
    "Losses",
    "Model",
    "ModelDims",
    "NumericError",
    "ParseError",
    "PolicyStats",
    "RunConfig",
    "ShapeError",
    "SimConfig",
    "SimulationReport",
    "TraceRecord",
    "TrainConfig",
    "__version__",
    "address_embedding",
    "admit",
    "bandwidth_silverman",
    "decode_future",
    "distribution_vector",
    "init_model",
    "kde_density",
    "label_trace",
    "load_checkpoint",
    "load_config",
    "load_trace",
    "make_model",
    "prefetch_forward",
    "pretrain",
    "recompose",
    "report",
    "report_to_csv",
    "report_to_json",
    "run_baseline",
    "run_simulation",
    "save_checkpoint",
    "select_prefetch_candidates",
    "simulate",
    "step_embedding",
    "synth_trace",
    "tokenize",
    "train",
    "train_model",
]
