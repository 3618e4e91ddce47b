"""Graph convolution laboratory: sequential, residual and multipath models.

Thin wrapper over the C++ core. The heavy operations (sparse propagation,
reverse-mode differentiation, training loops) all run in native code;
results come back as numpy arrays and plain python objects.
"""

from ._core import (
    CsrMatrix,
    Dataset,
    EpochRecord,
    ModelSpec,
    RunMetrics,
    TrainConfig,
    __version__,
    add_self_loops,
    build_csr,
    forward_logits,
    generate_sbm,
    gradcheck_suite,
    load_cache,
    load_linqs,
    make_splits,
    param_count,
    repeat_runs,
    save_cache,
    spmm,
    symmetric_normalize,
    train_run,
)

__all__ = [
    "CsrMatrix",
    "Dataset",
    "EpochRecord",
    "ModelSpec",
    "RunMetrics",
    "TrainConfig",
    "__version__",
    "add_self_loops",
    "build_csr",
    "forward_logits",
    "generate_sbm",
    "gradcheck_suite",
    "load_cache",
    "load_linqs",
    "make_splits",
    "param_count",
    "repeat_runs",
    "save_cache",
    "spmm",
    "symmetric_normalize",
    "train_run",
]
