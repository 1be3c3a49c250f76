"""Black-box systems under test: built-in ODE plants and an external-process protocol.

Built-in models integrate with classical fixed-step RK4 and are therefore
bit-for-bit reproducible. External models speak line-delimited JSON over the
child's stdin/stdout: one request line in, one response line out.
"""

from __future__ import annotations

import json
import math
import subprocess
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from speclint.logic import format_rational, rational
from speclint.trace import Trace, TraceError

PROTOCOL_VERSION = 1


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChannelSignal:
    times: tuple[Fraction, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        times = tuple(rational(t) for t in self.times)
        if not times or times[0] != 0:
            raise ValueError("control points must start at time 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("control-point times must be strictly increasing")
        if len(self.values) != len(times):
            raise ValueError("one value per control point")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class InputSignal:
    channels: Mapping[str, ChannelSignal]
    interp: str = "hold"  # "hold" | "linear"

    def __post_init__(self):
        if self.interp not in ("hold", "linear"):
            raise ValueError(f"unknown interpolation {self.interp!r}")
        object.__setattr__(self, "channels", dict(sorted(self.channels.items())))

    @classmethod
    def from_points(cls, points: Mapping[str, Sequence[tuple]], interp="hold") -> "InputSignal":
        return cls({ch: ChannelSignal(tuple(t for t, _ in pts), tuple(v for _, v in pts)) for ch, pts in points.items()}, interp)


def _interp_one(sig: ChannelSignal, t: Fraction, interp: str) -> float:
    i = bisect_right(sig.times, t) - 1
    if interp == "hold" or i == len(sig.times) - 1:
        return sig.values[i]
    t0, t1 = sig.times[i], sig.times[i + 1]
    v0, v1 = sig.values[i], sig.values[i + 1]
    w = float((t - t0) / (t1 - t0))
    return v0 + w * (v1 - v0)


def interpolate(sig: InputSignal, t) -> dict[str, float]:
    t = rational(t)
    if t < 0:
        raise ValueError("time must be non-negative")
    return {ch: _interp_one(c, t, sig.interp) for ch, c in sig.channels.items()}


def _sampled_inputs(sig: InputSignal, channel: str, step: Fraction, count: int) -> tuple[list[float], list[float]]:
    """Input values at ``i * step`` for ``i < count`` as (right limits, left limits).

    Control-point alignment is computed exactly, so a switch that falls on a
    grid point takes effect there and not one sample late.
    """
    c = sig.channels[channel]
    if sig.interp == "hold":
        right = np.empty(count)
        left = np.empty(count)
        starts = [math.ceil(t / step) for t in c.times]
        # left limits switch one index after the control time
        left_starts = [0] + [math.floor(t / step) + 1 for t in c.times[1:]]
        for out, marks in ((right, starts), (left, left_starts)):
            for k, start in enumerate(marks):
                end = marks[k + 1] if k + 1 < len(marks) else count
                out[min(start, count):min(end, count)] = c.values[k]
        return right.tolist(), left.tolist()
    grid = np.arange(count) * float(step)
    values = np.interp(grid, [float(t) for t in c.times], c.values).tolist()
    return values, values


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # builtin_secondorder | builtin_cruise | external
    parameters: Mapping[str, float] = field(default_factory=dict)
    integrator_step: float = 0.01
    output_sample_period: Fraction = Fraction(1, 10)
    command: tuple[str, ...] = ()
    horizon: Fraction | None = None  # simulation length; None lets the caller decide
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in MODELS and self.kind != "external":
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise ValueError("external models need a command")
        if self.integrator_step <= 0:
            raise ValueError("integrator step must be positive")
        period = rational(self.output_sample_period)
        if period <= 0:
            raise ValueError("output sample period must be positive")
        ratio = float(period) / self.integrator_step
        if abs(ratio - round(ratio)) > 1e-12 * max(1.0, ratio):
            raise ValueError("output sample period must be a multiple of the integrator step")
        object.__setattr__(self, "output_sample_period", period)
        object.__setattr__(self, "parameters", dict(sorted(self.parameters.items())))
        object.__setattr__(self, "command", tuple(self.command))
        if self.horizon is not None:
            object.__setattr__(self, "horizon", rational(self.horizon))
        if self.kind in MODELS:
            unknown = set(self.parameters) - set(MODELS[self.kind].defaults)
            if unknown:
                raise ValueError(f"unknown parameter(s) for {self.kind}: {', '.join(sorted(unknown))}")

    @property
    def input_channels(self) -> tuple[str, ...] | None:
        return MODELS[self.kind].inputs if self.kind in MODELS else None


@dataclass(frozen=True)
class BuiltinModel:
    defaults: Mapping[str, float]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    initial: Callable[[Mapping[str, float]], list[float]]
    rhs: Callable[[Mapping[str, float]], Callable[[list[float], float], list[float]]]
    output_index: tuple[int, ...]


def _secondorder_rhs(p):
    zeta, omega, gain = p["zeta"], p["omega"], p["K"]
    w2 = omega * omega
    damp = 2.0 * zeta * omega

    def rhs(s, u):
        x, y = s
        return [y, w2 * (gain * u - x) - damp * y]

    return rhs


def _cruise_rhs(p):
    c1, c2 = p["c1"], p["c2"]

    def rhs(s, u):
        (v,) = s
        u = min(1.0, max(0.0, u))
        return [u - c1 * v - c2 * v * v]

    return rhs


MODELS: dict[str, BuiltinModel] = {
    "builtin_secondorder": BuiltinModel(
        defaults={"zeta": 0.2, "omega": 1.0, "K": 1.0, "x0": 0.0, "y0": 0.0},
        inputs=("u",),
        outputs=("x",),
        initial=lambda p: [p["x0"], p["y0"]],
        rhs=_secondorder_rhs,
        output_index=(0,),
    ),
    "builtin_cruise": BuiltinModel(
        defaults={"c1": 0.1, "c2": 0.01, "v0": 0.0},
        inputs=("u",),
        outputs=("v",),
        initial=lambda p: [p["v0"]],
        rhs=_cruise_rhs,
        output_index=(0,),
    ),
}

MODEL_ALIASES = {"secondorder": "builtin_secondorder", "cruise": "builtin_cruise"}


def _rk4(rhs, state, inputs, left, h, n_steps, every):
    """Integrate ``n_steps`` steps; ``inputs``/``left`` hold u at every half step.

    The last stage of a step uses the left limit so that a hold switch at the
    step boundary does not leak into the preceding step.
    """
    samples = [list(state)]
    s = list(state)
    half = 0.5 * h
    sixth = h / 6.0
    dim = len(s)
    r = range(dim)
    for k in range(n_steps):
        u0 = inputs[2 * k]
        um = inputs[2 * k + 1]
        u1 = left[2 * k + 2]
        k1 = rhs(s, u0)
        k2 = rhs([s[i] + half * k1[i] for i in r], um)
        k3 = rhs([s[i] + half * k2[i] for i in r], um)
        k4 = rhs([s[i] + h * k3[i] for i in r], u1)
        s = [s[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in r]
        if (k + 1) % every == 0:
            samples.append(s)
    return samples


def simulate_builtin(m: ModelSpec, u: InputSignal, horizon) -> Trace:
    model = MODELS[m.kind]
    horizon = rational(horizon)
    if horizon <= 0:
        raise ValueError("simulation horizon must be positive")
    missing = set(model.inputs) - set(u.channels)
    if missing:
        raise SimulationError(f"{m.kind} needs input channel(s) {', '.join(sorted(missing))}")
    params = {**model.defaults, **m.parameters}
    step = rational(m.integrator_step)
    period = m.output_sample_period
    every = round(period / step)
    periods = horizon / period
    if periods.denominator != 1:
        raise SimulationError(
            f"horizon {format_rational(horizon)} is not a multiple of the sample period {format_rational(period)}"
        )
    n_steps = int(periods) * every
    inputs, left = _sampled_inputs(u, model.inputs[0], step / 2, 2 * n_steps + 1)
    rows = _rk4(model.rhs(params), model.initial(params), inputs, left, float(step), n_steps, every)
    times = tuple(k * period for k in range(len(rows)))
    columns = {name: tuple(row[i] for row in rows) for name, i in zip(model.outputs, model.output_index)}
    return Trace(times, columns)


def make_request(u: InputSignal, horizon, sample_period) -> dict:
    return {
        "protocol": PROTOCOL_VERSION,
        "horizon": float(horizon),
        "sample_period": float(sample_period),
        "inputs": {
            ch: {"times": [float(t) for t in c.times], "values": list(c.values), "interp": u.interp}
            for ch, c in u.channels.items()
        },
    }


def parse_response(line: str) -> Trace:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as e:
        raise SimulationError(f"malformed response from external model: {e}") from None
    if not isinstance(msg, dict) or msg.get("protocol") != PROTOCOL_VERSION:
        raise SimulationError("response does not speak protocol 1")
    times = msg.get("times")
    signals = msg.get("signals")
    if not isinstance(times, list) or not isinstance(signals, dict):
        raise SimulationError("response needs 'times' (list) and 'signals' (object)")
    try:
        exact = tuple(Fraction(repr(float(t))) for t in times)
        return Trace(exact, {k: tuple(float(x) for x in v) for k, v in signals.items()})
    except (TypeError, ValueError, TraceError) as e:
        raise SimulationError(f"bad trace from external model: {e}") from None


class ExternalSimulator:
    """A persistent child process answering one response line per request line.

    Requests are serialized per instance. Use as a context manager or call
    :meth:`close`.
    """

    def __init__(self, command: Sequence[str], timeout: float = 60.0):
        self.command = tuple(command)
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
            )
        except OSError as e:
            raise SimulationError(f"cannot start external model: {e}") from None

    def request(self, req: dict) -> Trace:
        proc = self.proc
        try:
            proc.stdin.write(json.dumps(req) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError):
            line = ""
        if not line:
            code = proc.wait(timeout=self.timeout)
            raise SimulationError(f"external model exited with status {code} before answering")
        return parse_response(line)

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        for stream in (self.proc.stdout, self.proc.stderr):
            if stream:
                stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def simulate_external(m: ModelSpec, u: InputSignal, horizon) -> Trace:
    """One-shot exchange: spawn, send one request, read one response, require exit 0."""
    req = make_request(u, horizon, m.output_sample_period)
    try:
        done = subprocess.run(
            m.command, input=json.dumps(req) + "\n", capture_output=True, text=True, timeout=m.timeout
        )
    except (OSError, subprocess.TimeoutExpired) as e:
        raise SimulationError(f"external model failed: {e}") from None
    if done.returncode != 0:
        raise SimulationError(f"external model exited with status {done.returncode}: {done.stderr.strip()[:200]}")
    lines = [l for l in done.stdout.splitlines() if l.strip()]
    if len(lines) != 1:
        raise SimulationError(f"external model must print exactly one response line, got {len(lines)}")
    return parse_response(lines[0])


def simulate(m: ModelSpec, u: InputSignal, horizon) -> Trace:
    if m.kind == "external":
        return simulate_external(m, u, horizon)
    return simulate_builtin(m, u, horizon)


def resolve_model(name: str) -> str:
    kind = MODEL_ALIASES.get(name, name)
    if kind not in MODELS and kind != "external":
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(sorted(MODEL_ALIASES))} or external")
    return kind
