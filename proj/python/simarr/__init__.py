"""Coupled parallel queues with simultaneous arrivals."""

from ._core import (
    Config,
    SimarrError,
    __version__,
    estimate_lst,
    psi,
    rouche_root,
    run_cli,
    simulate,
    survival,
    verify_duality,
)

__all__ = [
    "Config",
    "SimarrError",
    "estimate_lst",
    "psi",
    "rouche_root",
    "run_cli",
    "simulate",
    "survival",
    "verify_duality",
]
