"""A small deterministic DPLL solver.

Unit propagation uses two watched literals; branching picks the lowest
unassigned variable and tries ``False`` first; conflicts undo the most recent
unflipped decision (chronological backtracking, no clause learning).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence


@dataclass(frozen=True)
class SolverStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0


@dataclass(frozen=True)
class DpllResult:
    satisfiable: bool
    model: tuple[bool, ...] | None  # index 0 unused
    stats: SolverStats = field(default_factory=SolverStats)


def dpll(num_vars: int, clauses: Sequence[Sequence[int]]) -> DpllResult:
    value = [0] * (num_vars + 1)  # 0 unassigned, 1 true, -1 false
    trail: list[int] = []
    watches: dict[int, list[list[int]]] = {}
    units: list[int] = []
    decisions = propagations = conflicts = 0

    def lit_value(lit):
        v = value[abs(lit)]
        return v if lit > 0 else -v

    for c in clauses:
        if not c:
            return DpllResult(False, None, SolverStats())
        if len(c) == 1:
            units.append(c[0])
            continue
        cl = list(c)
        watches.setdefault(cl[0], []).append(cl)
        watches.setdefault(cl[1], []).append(cl)

    def assign(lit):
        value[abs(lit)] = 1 if lit > 0 else -1
        trail.append(lit)

    for lit in units:
        val = lit_value(lit)
        if val == -1:
            return DpllResult(False, None, SolverStats(conflicts=1))
        if val == 0:
            assign(lit)
            propagations += 1

    def propagate(qhead):
        nonlocal propagations
        while qhead < len(trail):
            false_lit = -trail[qhead]
            qhead += 1
            ws = watches.get(false_lit)
            if not ws:
                continue
            kept = []
            n = len(ws)
            i = 0
            while i < n:
                cl = ws[i]
                i += 1
                if cl[0] == false_lit:
                    cl[0], cl[1] = cl[1], cl[0]
                first = cl[0]
                if lit_value(first) == 1:
                    kept.append(cl)
                    continue
                for k in range(2, len(cl)):
                    if lit_value(cl[k]) != -1:
                        cl[1], cl[k] = cl[k], cl[1]
                        watches.setdefault(cl[1], []).append(cl)
                        break
                else:
                    kept.append(cl)
                    if lit_value(first) == -1:
                        kept.extend(ws[i:])
                        watches[false_lit] = kept
                        return False
                    assign(first)
                    propagations += 1
            watches[false_lit] = kept
        return True

    # stack of (trail position, decision literal, already flipped)
    stack: list[tuple[int, int, bool]] = []
    qhead = 0
    next_var = 1
    while True:
        if not propagate(qhead):
            conflicts += 1
            while stack:
                pos, lit, flipped = stack.pop()
                for undone in trail[pos:]:
                    value[abs(undone)] = 0
                    next_var = min(next_var, abs(undone))
                del trail[pos:]
                if not flipped:
                    stack.append((pos, -lit, True))
                    assign(-lit)
                    qhead = pos
                    break
            else:
                return DpllResult(False, None, SolverStats(decisions, propagations, conflicts))
            continue
        qhead = len(trail)
        while next_var <= num_vars and value[next_var] != 0:
            next_var += 1
        if next_var > num_vars:
            model = (False,) + tuple(v > 0 for v in value[1:])
            return DpllResult(True, model, SolverStats(decisions, propagations, conflicts))
        decisions += 1
        stack.append((len(trail), -next_var, False))
        assign(-next_var)
