"""Offline monitoring of sampled traces: Boolean verdicts, robustness and signal vacuity.

Semantics are pointwise over sample instants. Temporal windows select the
samples whose timestamps fall in the closed interval ``[t+a, t+b]``; an empty
selection is reported as an error since it means the trace is under-sampled.
Thresholds are compared in double precision so that the sign of robustness
always agrees with the Boolean verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from speclint.logic import (
    Always,
    And,
    Atom,
    Bottom,
    Eventually,
    Formula,
    Implies,
    Not,
    Or,
    Path,
    Top,
    Until,
    antecedent_failure_mutation,
    format_rational,
    horizon,
    implication_occurrences,
)
from speclint.trace import Trace, TraceError

PROPOSITION_THRESHOLD = 0.5


class MonitorError(ValueError):
    pass


@dataclass(frozen=True)
class Adequacy:
    ok: bool
    missing: Fraction = Fraction(0)

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class VacuityFlag:
    path: Path
    antecedent: Formula
    verdict: str  # "vacuous" | "non_vacuous"

    @property
    def vacuous(self) -> bool:
        return self.verdict == "vacuous"


def check_adequacy(f: Formula, tr: Trace, t0: Fraction = Fraction(0)) -> Adequacy:
    need = Fraction(t0) + horizon(f)
    if tr.end >= need:
        return Adequacy(True)
    return Adequacy(False, need - tr.end)


def _require_adequate(f, tr, t0):
    adequacy = check_adequacy(f, tr, t0)
    if not adequacy:
        raise MonitorError(
            f"trace too short: needs samples up to {format_rational(Fraction(t0) + horizon(f))}, "
            f"missing {format_rational(adequacy.missing)} time units"
        )


class _Evaluator:
    """Memoized evaluation over (node, sample index); one instance per call."""

    def __init__(self, tr: Trace, quantitative: bool):
        self.tr = tr
        self.q = quantitative
        self.memo: dict[tuple[int, int], float | bool] = {}
        self.cols: dict[str, tuple[float, ...]] = {}

    def column(self, channel):
        col = self.cols.get(channel)
        if col is None:
            try:
                col = self.cols[channel] = self.tr.values(channel)
            except TraceError as e:
                raise MonitorError(str(e)) from None
        return col

    def window(self, i, interval):
        t = self.tr.times[i]
        idx = self.tr.window(t + interval.lower, t + interval.upper)
        if not idx:
            raise MonitorError(
                f"empty window: no sample in [{format_rational(t + interval.lower)}, {format_rational(t + interval.upper)}]"
            )
        return idx

    def __call__(self, f: Formula, i: int):
        key = (id(f), i)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        value = self._eval(f, i)
        self.memo[key] = value
        return value

    def _eval(self, f, i):
        q = self.q
        if isinstance(f, Top):
            return math.inf if q else True
        if isinstance(f, Bottom):
            return -math.inf if q else False
        if isinstance(f, Atom):
            x = self.column(f.channel)[i]
            if f.op is None:
                return x - PROPOSITION_THRESHOLD if q else x >= PROPOSITION_THRESHOLD
            c = float(f.bound)
            if f.op == ">":
                return x - c if q else x > c
            if f.op == ">=":
                return x - c if q else x >= c
            if f.op == "<":
                return c - x if q else x < c
            return c - x if q else x <= c
        if isinstance(f, Not):
            v = self(f.arg, i)
            return -v if q else not v
        if isinstance(f, And):
            if q:
                return min(self(a, i) for a in f.args)
            return all(self(a, i) for a in f.args)
        if isinstance(f, Or):
            if q:
                return max(self(a, i) for a in f.args)
            return any(self(a, i) for a in f.args)
        if isinstance(f, Implies):
            if q:
                return max(-self(f.antecedent, i), self(f.consequent, i))
            return (not self(f.antecedent, i)) or self(f.consequent, i)
        if isinstance(f, Always):
            vals = (self(f.arg, j) for j in self.window(i, f.interval))
            return min(vals) if q else all(vals)
        if isinstance(f, Eventually):
            vals = (self(f.arg, j) for j in self.window(i, f.interval))
            return max(vals) if q else any(vals)
        if isinstance(f, Until):
            return self._until(f, i)
        raise TypeError(f"not a formula: {f!r}")

    def _until(self, f, i):
        win = self.window(i, f.interval)
        q = self.q
        best = -math.inf if q else False
        # running min of the left operand over samples in [t, t')
        prefix = math.inf if q else True
        j = i
        for k in win:
            while j < k:
                lv = self(f.left, j)
                prefix = min(prefix, lv) if q else (prefix and lv)
                j += 1
            rv = self(f.right, k)
            if q:
                best = max(best, min(rv, prefix))
            elif rv and prefix:
                return True
        return best


def robustness(f: Formula, tr: Trace, t0: Fraction = Fraction(0)) -> float:
    """Quantitative satisfaction of ``f`` by ``tr`` at ``t0``; ``true``/``false`` map to +/-inf."""
    _require_adequate(f, tr, t0)
    i = _index(tr, t0)
    return float(_Evaluator(tr, quantitative=True)(f, i))


def eval_bool(f: Formula, tr: Trace, t0: Fraction = Fraction(0)) -> bool:
    _require_adequate(f, tr, t0)
    i = _index(tr, t0)
    return bool(_Evaluator(tr, quantitative=False)(f, i))


def _index(tr, t0):
    try:
        return tr.index_of(Fraction(t0))
    except TraceError as e:
        raise MonitorError(str(e)) from None


def signal_vacuity(f: Formula, tr: Trace) -> list[VacuityFlag]:
    """One flag per implication; vacuous when the trace never triggers its antecedent."""
    _require_adequate(f, tr, Fraction(0))
    flags = []
    for path, antecedent in implication_occurrences(f):
        mutation = antecedent_failure_mutation(f, path)
        vacuous = eval_bool(mutation, tr, Fraction(0))
        flags.append(VacuityFlag(path, antecedent, "vacuous" if vacuous else "non_vacuous"))
    return flags
