"""Bounded discrete-time satisfiability for the always/eventually fragment."""

from speclint.satcheck.decide import (
    SatResult,
    check,
    check_conjunction,
    equivalent,
    is_satisfiable,
    is_tautology,
    solve,
)
from speclint.satcheck.dpll import SolverStats, dpll
from speclint.satcheck.encode import (
    DiscretizationConfig,
    DiscretizationError,
    UnrolledEncoding,
    WitnessError,
    choose_delta,
    default_config,
    lower_bound,
    rational_gcd,
    unroll,
    unroll_many,
    validate_config,
    witness_to_trace,
)

__all__ = [name for name in dir() if not name.startswith("_")]
