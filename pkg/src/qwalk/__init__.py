"""Two-loop discrete-time quantum walk: simulation and band-structure analysis."""

from ._backend import BACKEND
from .core import (
    BoundaryError,
    CoinOp,
    PhaseProfile,
    Spinor,
    Trajectory,
    WalkState,
    evolve,
    fidelity,
    make_initial,
    make_packet,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundaryError",
    "CoinOp",
    "PhaseProfile",
    "Spinor",
    "Trajectory",
    "WalkState",
    "evolve",
    "fidelity",
    "make_initial",
    "make_packet",
    "step",
]
