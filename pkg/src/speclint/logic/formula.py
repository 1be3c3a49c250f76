"""Abstract syntax for bounded MITL formulas and structural utilities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

Path = tuple[int, ...]
Number = Union[int, Fraction, str]

COMPARATORS = ("<", "<=", ">", ">=")


class FormulaError(ValueError):
    """Raised for structurally invalid formulas or paths."""


class FragmentError(FormulaError):
    """Raised when an operation needs the always/eventually fragment."""


def rational(x: Number | float) -> Fraction:
    """Coerce ints, decimal strings, fraction strings or floats to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # go through repr so 0.1 means one tenth, not the binary expansion
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Interval:
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lower", rational(self.lower))
        object.__setattr__(self, "upper", rational(self.upper))
        if self.lower < 0:
            raise FormulaError(f"negative interval bound {self.lower}")
        if self.lower > self.upper:
            raise FormulaError(f"reversed interval [{self.lower}, {self.upper}]")


class Formula:
    """Base class of all formula nodes. Nodes are immutable."""

    __slots__ = ()

    @property
    def children(self) -> tuple["Formula", ...]:
        return ()

    def with_children(self, children: tuple["Formula", ...]) -> "Formula":
        return self


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True)
class Atom(Formula):
    """A threshold predicate ``channel op bound`` or, with ``op=None``, a proposition."""

    channel: str
    op: str | None = None
    bound: Fraction | None = None

    def __post_init__(self):
        if not self.channel:
            raise FormulaError("atom channel must be a nonempty identifier")
        if self.op is None:
            if self.bound is not None:
                raise FormulaError("proposition atoms carry no bound")
            return
        if self.op not in COMPARATORS:
            raise FormulaError(f"unsupported comparator {self.op!r}")
        if self.bound is None:
            raise FormulaError("threshold atoms need a bound")
        object.__setattr__(self, "bound", rational(self.bound))

    @property
    def is_proposition(self) -> bool:
        return self.op is None


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    @property
    def children(self):
        return (self.arg,)

    def with_children(self, children):
        return Not(*children)


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise FormulaError("And needs at least two operands")

    @property
    def children(self):
        return self.args

    def with_children(self, children):
        return And(tuple(children))


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise FormulaError("Or needs at least two operands")

    @property
    def children(self):
        return self.args

    def with_children(self, children):
        return Or(tuple(children))


@dataclass(frozen=True)
class Implies(Formula):
    antecedent: Formula
    consequent: Formula

    @property
    def children(self):
        return (self.antecedent, self.consequent)

    def with_children(self, children):
        return Implies(*children)


@dataclass(frozen=True)
class Always(Formula):
    interval: Interval
    arg: Formula

    @property
    def children(self):
        return (self.arg,)

    def with_children(self, children):
        return Always(self.interval, *children)


@dataclass(frozen=True)
class Eventually(Formula):
    interval: Interval
    arg: Formula

    @property
    def children(self):
        return (self.arg,)

    def with_children(self, children):
        return Eventually(self.interval, *children)


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula

    @property
    def children(self):
        return (self.left, self.right)

    def with_children(self, children):
        return Until(self.interval, *children)


TEMPORAL = (Always, Eventually, Until)


def conj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args: Formula) -> Formula:
    return args[0] if len(args) == 1 else Or(tuple(args))


def walk(f: Formula, path: Path = ()) -> Iterator[tuple[Path, Formula]]:
    """Depth-first pre-order traversal yielding ``(path, node)``."""
    stack = [(path, f)]
    while stack:
        p, node = stack.pop()
        yield p, node
        kids = node.children
        for i in range(len(kids) - 1, -1, -1):
            stack.append((p + (i,), kids[i]))


def subformula(f: Formula, path: Path) -> Formula:
    node = f
    for i in path:
        kids = node.children
        if not 0 <= i < len(kids):
            raise FormulaError(f"path {list(path)} does not resolve")
        node = kids[i]
    return node


def replace_at(f: Formula, path: Path, new: Formula) -> Formula:
    """Return ``f`` with the node at ``path`` replaced; untouched subtrees are shared."""
    if not path:
        return new
    kids = list(f.children)
    i = path[0]
    if not 0 <= i < len(kids):
        raise FormulaError(f"path {list(path)} does not resolve")
    kids[i] = replace_at(kids[i], path[1:], new)
    return f.with_children(tuple(kids))


def horizon(f: Formula) -> Fraction:
    if isinstance(f, (Always, Eventually)):
        return f.interval.upper + horizon(f.arg)
    if isinstance(f, Until):
        return f.interval.upper + max(horizon(f.left), horizon(f.right))
    kids = f.children
    if not kids:
        return Fraction(0)
    return max(horizon(k) for k in kids)


def fragment_class(f: Formula) -> str:
    """``"box_diamond"`` when no Until occurs, else ``"full"``."""
    for _, node in walk(f):
        if isinstance(node, Until):
            return "full"
    return "box_diamond"


def require_box_diamond(f: Formula) -> None:
    if fragment_class(f) != "box_diamond":
        raise FragmentError("formula contains Until; only the always/eventually fragment is supported here")


def intervals(f: Formula) -> list[Interval]:
    return [node.interval for _, node in walk(f) if isinstance(node, TEMPORAL)]


def atoms(f: Formula) -> list[Atom]:
    seen = {}
    for _, node in walk(f):
        if isinstance(node, Atom):
            seen.setdefault(node, None)
    return list(seen)


def channels(f: Formula) -> list[str]:
    return sorted({a.channel for a in atoms(f)})


def implication_occurrences(f: Formula) -> list[tuple[Path, Formula]]:
    return [(p, node.antecedent) for p, node in walk(f) if isinstance(node, Implies)]


def antecedent_failure_mutation(f: Formula, occ: Path) -> Formula:
    """The formula stating that the antecedent at ``occ`` never holds within ``f``'s horizon.

    The window stops ``horizon(antecedent)`` short of the end so the mutation
    reads no further than ``f`` itself; every instant at which ``f`` can
    evaluate that antecedent still lies inside it.
    """
    node = subformula(f, occ)
    if not isinstance(node, Implies):
        raise FormulaError(f"path {list(occ)} addresses {type(node).__name__}, not an implication")
    return Always(Interval(0, horizon(f) - horizon(node.antecedent)), Not(node.antecedent))


def push_negation(f: Formula) -> Formula:
    """Negation of ``f`` with the negation pushed inwards by duality.

    Only defined on the always/eventually fragment; negations end up directly
    above atoms.
    """
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, And):
        return Or(tuple(push_negation(a) for a in f.args))
    if isinstance(f, Or):
        return And(tuple(push_negation(a) for a in f.args))
    if isinstance(f, Implies):
        return And((f.antecedent, push_negation(f.consequent)))
    if isinstance(f, Always):
        return Eventually(f.interval, push_negation(f.arg))
    if isinstance(f, Eventually):
        return Always(f.interval, push_negation(f.arg))
    raise FragmentError("cannot dualize Until within the always/eventually fragment")
