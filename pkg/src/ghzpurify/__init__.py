"""Recurrence purification of d-dimensional three-party GHZ states.

Direct purification acts on GHZ-diagonal ensembles with alternating phase
(P1) and level (P2) rounds; indirect purification reduces GHZ copies to
Bell pairs, purifies those, and fuses them back.  A circuit-level oracle
certifies every map at small d.
"""
from .direct import (
    GhzDiagonal,
    IsotropicFamily,
    Schedule,
    expected_copies,
    p1_map,
    p2_map,
    run_schedule,
    threshold_fidelity_direct,
)
from .exceptions import (
    BracketError,
    DegeneratePostselectionError,
    NonConvergenceError,
    PurificationError,
    ResourceGuardError,
)
from .indirect import (
    BellDiagonal,
    expected_copies_indirect,
    recombine,
    reduce_to_bell,
    run_indirect,
    threshold_fidelity_indirect,
)

__version__ = "0.1.0"

__all__ = [
    "BellDiagonal",
    "BracketError",
    "DegeneratePostselectionError",
    "GhzDiagonal",
    "IsotropicFamily",
    "NonConvergenceError",
    "PurificationError",
    "ResourceGuardError",
    "Schedule",
    "expected_copies",
    "expected_copies_indirect",
    "p1_map",
    "p2_map",
    "recombine",
    "reduce_to_bell",
    "run_indirect",
    "run_schedule",
    "threshold_fidelity_direct",
    "threshold_fidelity_indirect",
]
