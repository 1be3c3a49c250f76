"""Formula syntax, parsing and structural utilities."""

from speclint.logic.formula import (
    COMPARATORS,
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Bottom,
    Eventually,
    Formula,
    FormulaError,
    FragmentError,
    Implies,
    Interval,
    Not,
    Or,
    Path,
    Top,
    Until,
    antecedent_failure_mutation,
    atoms,
    channels,
    conj,
    disj,
    fragment_class,
    horizon,
    implication_occurrences,
    intervals,
    push_negation,
    rational,
    replace_at,
    require_box_diamond,
    subformula,
    walk,
)
from speclint.logic.syntax import ParseError, format_rational, parse, to_text

__all__ = [name for name in dir() if not name.startswith("_")]
