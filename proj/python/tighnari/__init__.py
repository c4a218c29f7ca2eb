"""Multi-modal plant species prediction: pipeline stages, survey graphs, and
set-valued post-processing, backed by the C++ core."""

from ._core import (
    ConfigError,
    DivergenceError,
    InputError,
    IoError,
    ShapeError,
    build_edges,
    compile_shortlists,
    compute_gfv,
    correct_output,
    grid_search,
    load_config,
    read_tensor,
    run_stage,
    samplewise_f1,
    threshold_topk,
    write_tensor,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "InputError",
    "IoError",
    "ShapeError",
    "build_edges",
    "compile_shortlists",
    "compute_gfv",
    "correct_output",
    "grid_search",
    "load_config",
    "read_tensor",
    "run_stage",
    "samplewise_f1",
    "threshold_topk",
    "write_tensor",
]
