"""Python bindings for the mmosim economy simulator."""

from ._core import (
    SimError,
    Simulation,
    fit_and_evaluate,
    generate_population,
    gini,
    log_content_hash,
    round_half_up_tax,
    run,
)

__all__ = [
    "SimError",
    "Simulation",
    "fit_and_evaluate",
    "generate_population",
    "gini",
    "log_content_hash",
    "round_half_up_tax",
    "run",
]
