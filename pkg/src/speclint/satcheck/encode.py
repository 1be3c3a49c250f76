"""Unrolling of always/eventually formulas into CNF over a discrete time grid.

Every threshold atom is normalized to a lower bound on its channel:
``v > c`` and ``v >= c`` are kept, ``v < c`` becomes ``not (v >= c)`` and
``v <= c`` becomes ``not (v > c)``; a proposition ``p`` is ``p >= 0.5``.
Per channel and step, the lower bounds are chained so that a stronger bound
implies the next weaker one, which makes every satisfying assignment
realizable by some real value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from speclint.logic import (
    Always,
    And,
    Atom,
    Bottom,
    Eventually,
    Formula,
    FormulaError,
    Implies,
    Not,
    Or,
    Top,
    format_rational,
    horizon,
    intervals,
    require_box_diamond,
    walk,
)
from speclint.trace import Trace

# (threshold, strict): strict means "v > c", non-strict "v >= c"
LowerBound = tuple[Fraction, bool]
AtomKey = tuple[str, LowerBound, int]

PROPOSITION_BOUND: LowerBound = (Fraction(1, 2), False)


class DiscretizationError(FormulaError):
    pass


class WitnessError(RuntimeError):
    """An assignment violates the threshold ladder; indicates an encoding bug."""


@dataclass(frozen=True)
class DiscretizationConfig:
    delta: Fraction
    horizon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "horizon", Fraction(self.horizon))
        if self.delta <= 0:
            raise DiscretizationError("delta must be positive")
        if self.horizon < 0:
            raise DiscretizationError("horizon must be non-negative")
        if (self.horizon / self.delta).denominator != 1:
            raise DiscretizationError(
                f"horizon {format_rational(self.horizon)} is not a multiple of delta {format_rational(self.delta)}"
            )

    @property
    def steps(self) -> int:
        return int(self.horizon / self.delta) + 1

    def step_of(self, t: Fraction) -> int:
        k = Fraction(t) / self.delta
        if k.denominator != 1:
            raise DiscretizationError(
                f"{format_rational(Fraction(t))} is not a multiple of delta {format_rational(self.delta)}"
            )
        return int(k)


def rational_gcd(values) -> Fraction:
    values = [Fraction(v) for v in values if v != 0]
    if not values:
        return Fraction(0)
    lcm = 1
    for v in values:
        lcm = lcm * v.denominator // gcd(lcm, v.denominator)
    g = 0
    for v in values:
        g = gcd(g, int(v * lcm))
    return Fraction(g, lcm)


def choose_delta(f: Formula, minimum: Fraction | None = None) -> Fraction:
    """Coarsest step dividing every interval endpoint of ``f``; 1 when there is none.

    A ``minimum`` guards against accidental blow-up: if the endpoints would
    force a finer step than that, a :class:`DiscretizationError` is raised.
    """
    ends = [e for iv in intervals(f) for e in (iv.lower, iv.upper)]
    g = rational_gcd(ends)
    if g == 0:
        return Fraction(1)
    if minimum is not None and g < Fraction(minimum):
        raise DiscretizationError(
            f"interval endpoints need delta {format_rational(g)}, below the minimum {format_rational(Fraction(minimum))}"
        )
    return g


def default_config(f: Formula, delta=None, horizon_=None) -> DiscretizationConfig:
    d = Fraction(delta) if delta is not None else choose_delta(f)
    h = Fraction(horizon_) if horizon_ is not None else horizon(f)
    return DiscretizationConfig(d, h)


def validate_config(f: Formula, cfg: DiscretizationConfig) -> None:
    need = horizon(f)
    if cfg.horizon < need:
        raise DiscretizationError(
            f"horizon {format_rational(cfg.horizon)} is shorter than the formula horizon {format_rational(need)}"
        )
    for iv in intervals(f):
        for e in (iv.lower, iv.upper):
            if (e / cfg.delta).denominator != 1:
                raise DiscretizationError(
                    f"interval endpoint {format_rational(e)} is not a multiple of delta {format_rational(cfg.delta)}"
                )


def lower_bound(atom: Atom) -> tuple[LowerBound, bool]:
    """Normalize an atom into ``(lower bound, polarity)``."""
    if atom.is_proposition:
        return PROPOSITION_BOUND, True
    if atom.op == ">":
        return (atom.bound, True), True
    if atom.op == ">=":
        return (atom.bound, False), True
    if atom.op == "<":
        return (atom.bound, False), False
    return (atom.bound, True), False


@dataclass(frozen=True)
class UnrolledEncoding:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    roots: tuple[int, ...]
    atom_vars: dict[AtomKey, int] = field(compare=False)
    config: DiscretizationConfig
    channel_kinds: dict[str, str] = field(compare=False)  # "proposition" | "threshold"
    channel_bounds: dict[str, tuple[LowerBound, ...]] = field(compare=False)

    @property
    def root(self) -> int:
        return self.roots[0]


class Encoder:
    """Tseitin-style encoder; several formulas may share one atom vocabulary."""

    def __init__(self, cfg: DiscretizationConfig):
        self.cfg = cfg
        self.num_vars = 0
        self.clauses: list[tuple[int, ...]] = []
        self.atom_vars: dict[AtomKey, int] = {}
        self.memo: dict[tuple[int, int], int] = {}
        self.keep: list[Formula] = []  # keeps memoized nodes alive so ids stay unique
        self.true_var = 0
        self.kinds: dict[str, str] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, *lits: int) -> None:
        clause = tuple(dict.fromkeys(lits))
        if any(-l in clause for l in clause):
            return
        self.clauses.append(clause)

    def encode(self, f: Formula) -> int:
        require_box_diamond(f)
        validate_config(f, self.cfg)
        self.keep.append(f)
        for _, node in walk(f):
            if isinstance(node, Atom):
                kind = "proposition" if node.is_proposition else "threshold"
                if self.kinds.get(node.channel, kind) != kind:
                    kind = "threshold"
                self.kinds[node.channel] = kind
        return self.lit(f, 0)

    def atom_var(self, channel: str, bound: LowerBound, k: int) -> int:
        key = (channel, bound, k)
        v = self.atom_vars.get(key)
        if v is None:
            v = self.atom_vars[key] = self.new_var()
        return v

    def _window(self, interval, k):
        lo = k + self.cfg.step_of(interval.lower)
        hi = k + self.cfg.step_of(interval.upper)
        if hi >= self.cfg.steps:
            raise DiscretizationError("temporal window exceeds the discretization horizon")
        return range(lo, hi + 1)

    def _and(self, lits):
        lits = list(dict.fromkeys(lits))
        if len(lits) == 1:
            return lits[0]
        x = self.new_var()
        for l in lits:
            self.add(-x, l)
        self.add(x, *(-l for l in lits))
        return x

    def _or(self, lits):
        return -self._and([-l for l in lits])

    def lit(self, f: Formula, k: int) -> int:
        key = (id(f), k)
        v = self.memo.get(key)
        if v is None:
            v = self.memo[key] = self._lit(f, k)
        return v

    def _lit(self, f, k):
        if isinstance(f, (Top, Bottom)):
            if not self.true_var:
                self.true_var = self.new_var()
                self.add(self.true_var)
            return self.true_var if isinstance(f, Top) else -self.true_var
        if isinstance(f, Atom):
            bound, positive = lower_bound(f)
            v = self.atom_var(f.channel, bound, k)
            return v if positive else -v
        if isinstance(f, Not):
            return -self.lit(f.arg, k)
        if isinstance(f, And):
            return self._and([self.lit(a, k) for a in f.args])
        if isinstance(f, Or):
            return self._or([self.lit(a, k) for a in f.args])
        if isinstance(f, Implies):
            return self._or([-self.lit(f.antecedent, k), self.lit(f.consequent, k)])
        if isinstance(f, Always):
            return self._and([self.lit(f.arg, j) for j in self._window(f.interval, k)])
        if isinstance(f, Eventually):
            return self._or([self.lit(f.arg, j) for j in self._window(f.interval, k)])
        raise TypeError(f"cannot encode {type(f).__name__}")

    def ladder(self) -> dict[str, tuple[LowerBound, ...]]:
        per_cell: dict[tuple[str, int], list[LowerBound]] = {}
        bounds: dict[str, set[LowerBound]] = {}
        for channel, bound, k in self.atom_vars:
            per_cell.setdefault((channel, k), []).append(bound)
            bounds.setdefault(channel, set()).add(bound)
        for (channel, k), cell in sorted(per_cell.items()):
            cell.sort()
            for weaker, stronger in zip(cell, cell[1:]):
                self.add(-self.atom_vars[(channel, stronger, k)], self.atom_vars[(channel, weaker, k)])
        return {c: tuple(sorted(b)) for c, b in sorted(bounds.items())}

    def finish(self, roots) -> UnrolledEncoding:
        channel_bounds = self.ladder()
        for r in roots:
            self.add(r)
        return UnrolledEncoding(
            num_vars=self.num_vars,
            clauses=tuple(self.clauses),
            roots=tuple(roots),
            atom_vars=dict(self.atom_vars),
            config=self.cfg,
            channel_kinds=dict(sorted(self.kinds.items())),
            channel_bounds=channel_bounds,
        )


def unroll(f: Formula, cfg: DiscretizationConfig) -> UnrolledEncoding:
    enc = Encoder(cfg)
    root = enc.encode(f)
    return enc.finish([root])


def unroll_many(formulas, cfg: DiscretizationConfig, combine=None) -> UnrolledEncoding:
    """Encode several formulas over shared atoms.

    ``combine`` receives the encoder and the root literals and returns the
    literals to assert; the default asserts all of them.
    """
    enc = Encoder(cfg)
    lits = [enc.encode(f) for f in formulas]
    roots = combine(enc, lits) if combine else lits
    return enc.finish(roots)


def _channel_value(kind, bounds, truth):
    """Pick a value realizing ``truth`` (mapping bound -> bool) for one channel at one step."""
    if kind == "proposition":
        return 1.0 if truth.get(PROPOSITION_BOUND, False) else 0.0
    assigned = sorted(truth)
    if not assigned:
        return float(bounds[0][0] - 1)
    # true bounds must form a prefix of the weakest-first order
    seen_false = None
    tightest_true = None
    for b in assigned:
        if truth[b]:
            if seen_false is not None:
                raise WitnessError(f"bound {b} true above false bound {seen_false}")
            tightest_true = b
        elif seen_false is None:
            seen_false = b
    if tightest_true is None:
        return float(seen_false[0] - 1)
    if seen_false is None:
        return float(tightest_true[0] + 1)
    lo, hi = tightest_true[0], seen_false[0]
    if lo == hi:
        # v >= c true, v > c false
        return float(lo)
    return float((lo + hi) / 2)


def witness_to_trace(f: Formula, assignment: dict[AtomKey, bool], cfg: DiscretizationConfig) -> Trace:
    """Reconstruct a sampled signal from an atom-level assignment.

    Threshold channels take the midpoint of the interval consistent with the
    step's atom literals (one unit beyond the extreme threshold when that side
    is unbounded); pure proposition channels emit 1.0 or 0.0.
    """
    kinds: dict[str, str] = {}
    bounds: dict[str, set] = {}
    for _, node in walk(f):
        if isinstance(node, Atom):
            kind = "proposition" if node.is_proposition else "threshold"
            if kinds.get(node.channel, kind) != kind:
                kind = "threshold"
            kinds[node.channel] = kind
            bounds.setdefault(node.channel, set()).add(lower_bound(node)[0])
    cells: dict[tuple[str, int], dict[LowerBound, bool]] = {}
    for (channel, bound, k), value in assignment.items():
        cells.setdefault((channel, k), {})[bound] = value
    n = cfg.steps
    columns = {}
    for channel in sorted(kinds):
        b = sorted(bounds[channel])
        columns[channel] = tuple(
            _channel_value(kinds[channel], b, cells.get((channel, k), {})) for k in range(n)
        )
    return Trace(tuple(k * cfg.delta for k in range(n)), columns)
