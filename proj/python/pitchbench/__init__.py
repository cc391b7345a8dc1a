"""Pitch-control sequence modelling and benchmarking (C++ core)."""

from ._core import (
    Cvrnn,
    PitchbenchError,
    apply_staying_rule,
    area_fraction,
    control_field,
    heuristic_label,
    run_stage,
    sha256_file,
    solve_epv,
    ssim,
)

__all__ = [
    "Cvrnn",
    "PitchbenchError",
    "apply_staying_rule",
    "area_fraction",
    "control_field",
    "heuristic_label",
    "run_stage",
    "sha256_file",
    "solve_epv",
    "ssim",
]
