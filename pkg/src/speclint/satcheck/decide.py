"""Bounded satisfiability, validity and equivalence checks for the always/eventually fragment."""

from __future__ import annotations

from dataclasses import dataclass

from speclint.logic import And, Formula, push_negation
from speclint.satcheck.dpll import SolverStats, dpll
from speclint.satcheck.encode import (
    AtomKey,
    DiscretizationConfig,
    UnrolledEncoding,
    default_config,
    unroll,
    unroll_many,
    witness_to_trace,
)
from speclint.trace import Trace


@dataclass(frozen=True)
class SatResult:
    status: str  # "satisfiable" | "unsatisfiable"
    assignment: dict[AtomKey, bool] | None
    stats: SolverStats
    witness: Trace | None = None

    @property
    def satisfiable(self) -> bool:
        return self.status == "satisfiable"


def solve(enc: UnrolledEncoding) -> SatResult:
    res = dpll(enc.num_vars, enc.clauses)
    if not res.satisfiable:
        return SatResult("unsatisfiable", None, res.stats)
    assignment = {key: res.model[v] for key, v in sorted(enc.atom_vars.items(), key=lambda kv: kv[1])}
    return SatResult("satisfiable", assignment, res.stats)


def check(f: Formula, cfg: DiscretizationConfig | None = None) -> SatResult:
    """Decide ``f`` at step 0 and attach a witness trace when satisfiable."""
    cfg = cfg or default_config(f)
    res = solve(unroll(f, cfg))
    if res.satisfiable:
        return SatResult(res.status, res.assignment, res.stats, witness_to_trace(f, res.assignment, cfg))
    return res


def is_satisfiable(f: Formula, cfg: DiscretizationConfig | None = None) -> bool:
    return check(f, cfg).satisfiable


def is_tautology(f: Formula, cfg: DiscretizationConfig | None = None) -> bool:
    cfg = cfg or default_config(f)
    return not is_satisfiable(push_negation(f), cfg)


def _differ(enc, lits):
    a, b = lits
    enc.add(a, b)
    enc.add(-a, -b)
    return []


def equivalent(f: Formula, g: Formula, cfg: DiscretizationConfig) -> bool:
    """True when no trace distinguishes ``f`` from ``g`` at step 0."""
    enc = unroll_many([f, g], cfg, combine=_differ)
    return not solve(enc).satisfiable


def check_conjunction(f: Formula, g: Formula, cfg: DiscretizationConfig) -> SatResult:
    return check(And((f, g)), cfg)
