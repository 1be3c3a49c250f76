"""System-independent specification debugging: validity, redundancy and vacuity.

The stages run in that order and the pipeline stops after a validity issue,
since a formula that is unsatisfiable or always true has nothing left to
debug.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from speclint.logic import (
    TRUE,
    And,
    Formula,
    FormulaError,
    Path,
    antecedent_failure_mutation,
    format_rational,
    implication_occurrences,
    replace_at,
    require_box_diamond,
    subformula,
    to_text,
    walk,
)
from speclint.satcheck import (
    DiscretizationConfig,
    check,
    default_config,
    equivalent,
    is_tautology,
    validate_config,
)
from speclint.trace import Trace

STAGES = ("validity", "redundancy", "vacuity")


@dataclass(frozen=True)
class LintIssue:
    kind: str  # unsatisfiable | tautology | redundant_conjunct | vacuous_antecedent
    path: Path | None
    detail: str
    witness: Trace | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "path": None if self.path is None else list(self.path), "detail": self.detail}
        if self.witness is not None:
            out["witness_csv"] = self.witness.to_csv()
        return out


@dataclass(frozen=True)
class LintReport:
    formula: Formula
    delta: Fraction | None
    horizon: Fraction | None
    issues: tuple[LintIssue, ...] = ()
    stages_run: tuple[str, ...] = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and not self.issues

    def to_json(self) -> dict:
        out = {
            "formula": to_text(self.formula),
            "delta": None if self.delta is None else format_rational(self.delta),
            "horizon": None if self.horizon is None else format_rational(self.horizon),
            "issues": [i.to_json() for i in self.issues],
            "stages_run": list(self.stages_run),
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def render_text(self) -> str:
        lines = [f"formula: {to_text(self.formula)}"]
        if self.delta is not None:
            lines.append(f"delta: {format_rational(self.delta)}  horizon: {format_rational(self.horizon)}")
        lines.append("stages: " + (", ".join(self.stages_run) or "none"))
        if self.error:
            lines.append(f"error: {self.error}")
        if not self.issues and not self.error:
            lines.append("no issues found")
        for issue in self.issues:
            where = "" if issue.path is None else f" at {list(issue.path)}"
            lines.append(f"{issue.kind}{where}: {issue.detail}")
            if issue.witness is not None:
                lines.extend("    " + row for row in issue.witness.to_csv().splitlines())
        return "\n".join(lines)


def check_validity(f: Formula, cfg: DiscretizationConfig) -> list[LintIssue]:
    require_box_diamond(f)
    res = check(f, cfg)
    if not res.satisfiable:
        return [LintIssue("unsatisfiable", None, "no signal satisfies the formula")]
    if is_tautology(f, cfg):
        return [LintIssue("tautology", None, "every signal satisfies the formula")]
    return []


def _conjunct_paths(f: Formula) -> list[Path]:
    return [p + (i,) for p, node in walk(f) if isinstance(node, And) for i in range(len(node.args))]


def check_redundancy(f: Formula, cfg: DiscretizationConfig) -> list[LintIssue]:
    """Flag conjuncts whose replacement by ``true`` leaves the formula equivalent.

    Candidates are tried from the last pre-order position backwards and each
    flagged conjunct stays replaced while later candidates are checked, so
    with duplicates the earliest occurrence survives and all flagged
    conjuncts can be dropped together.
    """
    require_box_diamond(f)
    current = f
    flagged: list[Path] = []
    for path in reversed(_conjunct_paths(f)):
        if any(path[: len(q)] == q for q in flagged):
            continue
        candidate = replace_at(current, path, TRUE)
        if equivalent(current, candidate, cfg):
            flagged.append(path)
            current = candidate
    flagged = [p for p in flagged if not any(len(q) < len(p) and p[: len(q)] == q for q in flagged)]
    issues = []
    for path in sorted(flagged):
        text = to_text(subformula(f, path))
        issues.append(LintIssue("redundant_conjunct", path, f"conjunct {text} is implied by the rest of the formula"))
    return issues


def check_vacuity(f: Formula, cfg: DiscretizationConfig) -> list[LintIssue]:
    require_box_diamond(f)
    issues = []
    for path, antecedent in implication_occurrences(f):
        mutation = antecedent_failure_mutation(f, path)
        res = check(And((f, mutation)), cfg)
        if res.satisfiable:
            issues.append(
                LintIssue(
                    "vacuous_antecedent",
                    path,
                    f"the formula holds on a signal where antecedent {to_text(antecedent)} never occurs",
                    res.witness,
                )
            )
    return issues


def lint(f: Formula, delta=None, horizon=None) -> LintReport:
    """Run the debugging pipeline; problems with the input are reported, not raised."""
    try:
        require_box_diamond(f)
        cfg = default_config(f, delta, horizon)
        validate_config(f, cfg)
    except FormulaError as e:
        return LintReport(f, None, None, error=str(e))
    issues = check_validity(f, cfg)
    if issues:
        return LintReport(f, cfg.delta, cfg.horizon, tuple(issues), ("validity",))
    issues = check_redundancy(f, cfg) + check_vacuity(f, cfg)
    return LintReport(f, cfg.delta, cfg.horizon, tuple(issues), STAGES)
