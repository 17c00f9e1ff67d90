"""Associative-memory benchmark: kernel and logistic learning rules for
bipolar pattern storage, synchronous recall dynamics, and the experiment
harness (capacity, noise-basin, and training-time sweeps) around them.
"""

from .experiments import (
    DEFAULT_BETA_GRID,
    DEFAULT_NOISE_GRID,
    DEFAULT_TIMING_GRID,
    ExperimentRow,
    SweepConfig,
    capacity_sweep,
    noise_sweep,
    read_rows,
    render_plot,
    timing_benchmark,
    write_rows,
)
from .kernel import (
    FactorizationError,
    KernelConfig,
    check_kernel_matrix,
    for_dimension,
    gram_matrix,
    kernel_row,
    rbf,
    solve_regularized,
)
from .learning import (
    RULES,
    DualModel,
    NonFiniteLossError,
    TrainConfig,
    WeightModel,
    binary_targets,
    load_model,
    save_model,
    train_hebbian,
    train_klr,
    train_krr,
    train_llr,
    train_rule,
)
from .patterns import (
    MAX_SEED,
    EntryDomainError,
    PatternFormatError,
    PatternSet,
    corrupt,
    derive_seed,
    generate_patterns,
    load_patterns,
    overlap,
    save_patterns,
)
from .recall import RecallTrace, is_success, run, step

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # patterns
    "MAX_SEED",
    "PatternSet",
    "PatternFormatError",
    "EntryDomainError",
    "derive_seed",
    "generate_patterns",
    "corrupt",
    "overlap",
    "save_patterns",
    "load_patterns",
    # kernel
    "KernelConfig",
    "FactorizationError",
    "for_dimension",
    "rbf",
    "gram_matrix",
    "kernel_row",
    "solve_regularized",
    "check_kernel_matrix",
    # learning
    "RULES",
    "TrainConfig",
    "WeightModel",
    "DualModel",
    "NonFiniteLossError",
    "binary_targets",
    "train_hebbian",
    "train_llr",
    "train_klr",
    "train_krr",
    "train_rule",
    "save_model",
    "load_model",
    # recall
    "RecallTrace",
    "step",
    "run",
    "is_success",
    # experiments
    "SweepConfig",
    "ExperimentRow",
    "DEFAULT_BETA_GRID",
    "DEFAULT_NOISE_GRID",
    "DEFAULT_TIMING_GRID",
    "capacity_sweep",
    "noise_sweep",
    "timing_benchmark",
    "write_rows",
    "read_rows",
    "render_plot",
]
