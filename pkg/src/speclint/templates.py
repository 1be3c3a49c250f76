"""Parameterized signal templates for control requirements (settling, overshoot)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from speclint.logic import Always, And, Atom, Formula, Interval, format_rational, rational


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    doc: str
    default: Fraction
    lower: Fraction | None = None  # exclusive unless lower_inclusive
    lower_inclusive: bool = False


@dataclass(frozen=True)
class TemplateSpec:
    id: str
    doc: str
    params: tuple[ParamSpec, ...]
    # parameters whose increase can only turn a violation into satisfaction
    monotone: tuple[str, ...]
    example_channel: str = "x"

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return ("channel",) + tuple(p.name for p in self.params)


CATALOG: tuple[TemplateSpec, ...] = (
    TemplateSpec(
        "settling",
        "after the settling time the signal stays strictly within ref +/- r until H",
        (
            ParamSpec("ref", "reference value", Fraction(1)),
            ParamSpec("r", "half-width of the settling region", Fraction(1, 10), Fraction(0)),
            ParamSpec("ts", "settling time", Fraction(20), Fraction(0), lower_inclusive=True),
            ParamSpec("H", "end of the observation window (> ts)", Fraction(40), Fraction(0)),
        ),
        monotone=("r",),
    ),
    TemplateSpec(
        "overshoot",
        "the signal stays below ref * (1 + m) on [0, H]; ref must be positive",
        (
            ParamSpec("ref", "reference value (> 0)", Fraction(1), Fraction(0)),
            ParamSpec("m", "relative overshoot margin", Fraction(1, 5), Fraction(0)),
            ParamSpec("H", "end of the observation window", Fraction(40), Fraction(0), lower_inclusive=True),
        ),
        monotone=("m",),
    ),
)


def list_templates() -> tuple[TemplateSpec, ...]:
    return CATALOG


def template_spec(template_id: str) -> TemplateSpec:
    for spec in CATALOG:
        if spec.id == template_id:
            return spec
    raise TemplateError(f"unknown template {template_id!r}; known: {', '.join(s.id for s in CATALOG)}")


@dataclass(frozen=True)
class TemplateInstance:
    template_id: str
    channel: str
    parameters: Mapping[str, Fraction]

    def __post_init__(self):
        spec = template_spec(self.template_id)
        params = {}
        for p in spec.params:
            if p.name not in self.parameters:
                raise TemplateError(f"template {spec.id} needs parameter {p.name!r}")
            value = rational(self.parameters[p.name])
            if p.lower is not None and (value < p.lower or (value == p.lower and not p.lower_inclusive)):
                op = ">=" if p.lower_inclusive else ">"
                raise TemplateError(f"{spec.id}: parameter {p.name} must be {op} {format_rational(p.lower)}")
            params[p.name] = value
        extra = set(self.parameters) - set(params)
        if extra:
            raise TemplateError(f"template {spec.id} has no parameter(s) {', '.join(sorted(extra))}")
        if spec.id == "settling" and params["H"] <= params["ts"]:
            raise TemplateError("settling: end time H must exceed ts")
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", self.channel or ""):
            raise TemplateError(f"bad channel name {self.channel!r}")
        object.__setattr__(self, "parameters", params)

    def with_parameter(self, name: str, value) -> "TemplateInstance":
        params = dict(self.parameters)
        params[name] = rational(value)
        return TemplateInstance(self.template_id, self.channel, params)

    def to_literal(self) -> str:
        args = ",".join(f"{k}={format_rational(v)}" for k, v in self.parameters.items())
        return f"template:{self.template_id}({self.channel},{args})"


def instantiate(t: TemplateInstance) -> Formula:
    p = t.parameters
    x = t.channel
    if t.template_id == "settling":
        region = And((Atom(x, ">", p["ref"] - p["r"]), Atom(x, "<", p["ref"] + p["r"])))
        return Always(Interval(p["ts"], p["H"]), region)
    if t.template_id == "overshoot":
        return Always(Interval(0, p["H"]), Atom(x, "<", p["ref"] * (1 + p["m"])))
    raise TemplateError(f"unknown template {t.template_id!r}")


def example_instance(spec: TemplateSpec) -> TemplateInstance:
    return TemplateInstance(spec.id, spec.example_channel, {p.name: p.default for p in spec.params})


_LITERAL = re.compile(r"\s*template:\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$", re.S)


def is_template_literal(text: str) -> bool:
    return text.lstrip().startswith("template:")


def parse_template(text: str) -> TemplateInstance:
    """Parse ``template:settling(x,ref=1,r=0.1,ts=20,H=40)``."""
    m = _LITERAL.match(text)
    if not m:
        raise TemplateError(f"malformed template literal {text.strip()!r}")
    template_id, body = m.groups()
    parts = [s.strip() for s in body.split(",")]
    if not parts or not parts[0] or "=" in parts[0]:
        raise TemplateError("template literal must start with the channel name")
    params = {}
    for item in parts[1:]:
        name, sep, value = item.partition("=")
        if not sep:
            raise TemplateError(f"expected name=value, got {item!r}")
        try:
            params[name.strip()] = Fraction(value.strip())
        except ValueError:
            raise TemplateError(f"bad value for {name.strip()}: {value.strip()!r}") from None
    return TemplateInstance(template_id, parts[0], params)
