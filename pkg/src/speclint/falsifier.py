"""Falsification by stochastic local search over a gridded input space, plus requirement mining.

Inputs are parameterized per channel by control times and a finite set of
value levels; a candidate picks one level index per control point. The
search moves between neighbours that differ by one level at one control
point, remembers evaluated signals in a bounded tabu list, refines the grid
when progress stalls, and restarts from a random candidate once refinement
is used up.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from speclint.logic import Formula, format_rational, horizon, rational
from speclint.monitor import robustness
from speclint.plant import ChannelSignal, InputSignal, ModelSpec, simulate
from speclint.templates import TemplateError, TemplateInstance, instantiate, template_spec
from speclint.trace import Trace

# Stands in for +/-inf robustness so that cost comparisons stay total.
SENTINEL = sys.float_info.max


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelGrid:
    times: tuple[Fraction, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        times = tuple(rational(t) for t in self.times)
        levels = tuple(float(v) for v in self.levels)
        if not times or times[0] != 0:
            raise GridError("control times must start at 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GridError("control times must be strictly increasing")
        if len(levels) < 2:
            raise GridError("each channel needs at least two value levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise GridError("value levels must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True)
class Grid:
    channels: Mapping[str, ChannelGrid]
    interp: str = "hold"

    def __post_init__(self):
        if not self.channels:
            raise GridError("grid has no channels")
        if self.interp not in ("hold", "linear"):
            raise GridError(f"unknown interpolation {self.interp!r}")
        object.__setattr__(self, "channels", dict(sorted(self.channels.items())))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.channels)

    @property
    def end_time(self) -> Fraction:
        return max(c.times[-1] for c in self.channels.values())

    def size(self) -> int:
        return math.prod(len(c.levels) ** len(c.times) for c in self.channels.values())

    def signal(self, cand: "Candidate") -> InputSignal:
        return InputSignal(
            {
                name: ChannelSignal(ch.times, tuple(ch.levels[i] for i in idx))
                for (name, ch), idx in zip(self.channels.items(), cand)
            },
            self.interp,
        )

    def to_json(self) -> dict:
        return {
            "channels": {
                name: {"times": [format_rational(t) for t in ch.times], "levels": list(ch.levels), "interp": self.interp}
                for name, ch in self.channels.items()
            }
        }

    @classmethod
    def from_json(cls, data: dict) -> "Grid":
        try:
            chans = data["channels"]
            interps = {spec.get("interp", "hold") for spec in chans.values()}
            if len(interps) > 1:
                raise GridError("all channels must use the same interpolation")
            grid = {
                name: ChannelGrid(tuple(rational(str(t)) for t in spec["times"]), tuple(spec["levels"]))
                for name, spec in chans.items()
            }
        except (KeyError, TypeError, AttributeError) as e:
            raise GridError(f"malformed grid: {e}") from None
        return cls(grid, interps.pop() if interps else "hold")

    @classmethod
    def read(cls, path) -> "Grid":
        return cls.from_json(json.loads(Path(path).read_text()))


# one tuple of level indices per channel, channels in sorted order
Candidate = tuple[tuple[int, ...], ...]


def validate_candidate(c: Candidate, g: Grid) -> None:
    if len(c) != len(g.channels):
        raise GridError("candidate has the wrong number of channels")
    for idx, ch in zip(c, g.channels.values()):
        if len(idx) != len(ch.times) or any(not 0 <= i < len(ch.levels) for i in idx):
            raise GridError("candidate index out of range for the grid")


def candidate_points(c: Candidate, g: Grid) -> dict[str, list[tuple[Fraction, float]]]:
    return {name: [(t, ch.levels[i]) for t, i in zip(ch.times, idx)] for (name, ch), idx in zip(g.channels.items(), c)}


def candidate_hash(c: Candidate, g: Grid) -> str:
    """Identity of the input signal a candidate denotes, independent of grid resolution."""
    text = ";".join(
        name + ":" + ",".join(f"{format_rational(t)}={v!r}" for t, v in pts)
        for name, pts in candidate_points(c, g).items()
    )
    return hashlib.blake2b(f"{g.interp}|{text}".encode(), digest_size=8).hexdigest()


def neighbors(c: Candidate, g: Grid) -> list[Candidate]:
    out = []
    for ci, (idx, ch) in enumerate(zip(c, g.channels.values())):
        for ti in range(len(idx)):
            for step in (-1, 1):
                j = idx[ti] + step
                if 0 <= j < len(ch.levels):
                    moved = idx[:ti] + (j,) + idx[ti + 1 :]
                    out.append(c[:ci] + (moved,) + c[ci + 1 :])
    return out


def _midpoints(xs):
    out = [xs[0]]
    for a, b in zip(xs, xs[1:]):
        out.extend(((a + b) / 2, b))
    return tuple(out)


def refine(g: Grid) -> Grid:
    return Grid({name: ChannelGrid(_midpoints(ch.times), _midpoints(ch.levels)) for name, ch in g.channels.items()}, g.interp)


def embed(c: Candidate, g: Grid) -> Candidate:
    """Map a candidate of ``g`` into ``refine(g)``.

    Old control points keep their level (index doubled). A new midpoint time
    copies the preceding level under hold, which reproduces the same signal;
    under linear interpolation it takes the middle index, exact whenever the
    two neighbouring levels are at most one index apart.
    """
    out = []
    for idx in c:
        new = [2 * idx[0]]
        for a, b in zip(idx, idx[1:]):
            new.append(2 * a if g.interp == "hold" else a + b)
            new.append(2 * b)
        out.append(tuple(new))
    return tuple(out)


def simulation_horizon(f: Formula, m: ModelSpec, g: Grid) -> Fraction:
    if m.horizon is not None:
        return m.horizon
    h = max(horizon(f), g.end_time)
    period = m.output_sample_period
    # round up to whole sample periods so the trace ends on a sample
    return math.ceil(h / period) * period if h > 0 else period


def simulate_candidate(f: Formula, m: ModelSpec, c: Candidate, g: Grid) -> Trace:
    validate_candidate(c, g)
    return simulate(m, g.signal(c), simulation_horizon(f, m, g))


def clamp(rho: float) -> float:
    if math.isnan(rho):
        raise ValueError("robustness is NaN")
    return max(-SENTINEL, min(SENTINEL, rho))


def cost(f: Formula, m: ModelSpec, c: Candidate, g: Grid) -> float:
    """Robustness of ``f`` on the simulated response to candidate ``c``."""
    return clamp(robustness(f, simulate_candidate(f, m, c, g), Fraction(0)))


def _cost_job(args):
    return cost(*args)


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 200
    seed: int = 0
    neighbor_sample_size: int = 8
    stall_threshold: int = 10
    max_refinements: int = 3
    tabu_capacity: int = 1000
    restart_limit: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be a positive number of simulations")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("neighbor_sample_size", "stall_threshold", "tabu_capacity", "jobs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_refinements < 0 or (self.restart_limit is not None and self.restart_limit < 0):
            raise ValueError("refinement and restart limits must be non-negative")


@dataclass(frozen=True)
class FalsificationResult:
    status: str  # "falsified" | "budget_exhausted"
    best_candidate: Candidate
    best_grid: Grid
    best_robustness: float
    simulations_used: int
    history: tuple[tuple[str, float], ...]
    refinements: int = 0
    restarts: int = 0

    @property
    def falsified(self) -> bool:
        return self.status == "falsified"

    @property
    def best_signal(self) -> InputSignal:
        return self.best_grid.signal(self.best_candidate)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "best_robustness": self.best_robustness,
            "simulations_used": self.simulations_used,
            "refinements": self.refinements,
            "restarts": self.restarts,
            "best_candidate": {
                name: [[format_rational(t), v] for t, v in pts]
                for name, pts in candidate_points(self.best_candidate, self.best_grid).items()
            },
            "interp": self.best_grid.interp,
            "history": [[h, r] for h, r in self.history],
        }


class _Tabu:
    def __init__(self, capacity):
        self.capacity = capacity
        self.items: OrderedDict[str, None] = OrderedDict()

    def __contains__(self, key):
        return key in self.items

    def add(self, key):
        self.items[key] = None
        self.items.move_to_end(key)
        while len(self.items) > self.capacity:
            self.items.popitem(last=False)


class _Search:
    def __init__(self, f, m, g, cfg):
        self.f, self.m, self.grid, self.cfg = f, m, g, cfg
        self.rng = np.random.Generator(np.random.PCG64(cfg.seed))
        self.tabu = _Tabu(cfg.tabu_capacity)
        self.history: list[tuple[str, float]] = []
        self.best = None  # (cost, candidate, grid)
        self.refinements = 0
        self.restarts = 0
        self.pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None

    @property
    def remaining(self):
        return self.cfg.budget - len(self.history)

    def evaluate(self, cands: list[Candidate]) -> list[float]:
        """Evaluate in order, stopping after the first negative cost or when the budget runs out."""
        cands = cands[: self.remaining]
        if self.pool is not None and len(cands) > 1:
            costs = list(self.pool.map(_cost_job, [(self.f, self.m, c, self.grid) for c in cands]))
        else:
            costs = None
        out = []
        for k, c in enumerate(cands):
            value = costs[k] if costs is not None else cost(self.f, self.m, c, self.grid)
            key = candidate_hash(c, self.grid)
            self.tabu.add(key)
            self.history.append((key, value))
            out.append(value)
            if self.best is None or value < self.best[0]:
                self.best = (value, c, self.grid)
            if value < 0:
                break
        return out

    def random_candidate(self) -> Candidate | None:
        g = self.grid
        for _ in range(1000):
            c = tuple(
                tuple(int(i) for i in self.rng.integers(0, len(ch.levels), size=len(ch.times)))
                for ch in g.channels.values()
            )
            if candidate_hash(c, g) not in self.tabu:
                return c
        return None

    def done(self):
        return self.remaining <= 0 or (self.best is not None and self.best[0] < 0)

    def run(self) -> FalsificationResult:
        try:
            self._loop()
        finally:
            if self.pool is not None:
                self.pool.shutdown()
        value, cand, grid = self.best
        return FalsificationResult(
            "falsified" if value < 0 else "budget_exhausted",
            cand,
            grid,
            value,
            len(self.history),
            tuple(self.history),
            self.refinements,
            self.restarts,
        )

    def _start(self) -> bool:
        c = self.random_candidate()
        if c is None:
            return False
        self.current = c
        self.current_cost = self.evaluate([c])[0]
        return True

    def _loop(self):
        if not self._start():
            raise GridError("grid admits no candidate")
        stalls = 0
        while not self.done():
            pool = [n for n in neighbors(self.current, self.grid) if candidate_hash(n, self.grid) not in self.tabu]
            if len(pool) > self.cfg.neighbor_sample_size:
                picks = self.rng.choice(len(pool), size=self.cfg.neighbor_sample_size, replace=False)
                pool = [pool[i] for i in sorted(int(p) for p in picks)]
            costs = self.evaluate(pool) if pool else []
            if self.done():
                break
            if costs and min(costs) < self.current_cost:
                k = costs.index(min(costs))
                self.current, self.current_cost = pool[k], costs[k]
                stalls = 0
            else:
                stalls += 1
            if stalls < self.cfg.stall_threshold:
                continue
            stalls = 0
            if self.refinements < self.cfg.max_refinements:
                self.current = embed(self.current, self.grid)
                self.grid = refine(self.grid)
                self.refinements += 1
                continue
            if self.cfg.restart_limit is not None and self.restarts >= self.cfg.restart_limit:
                break
            self.restarts += 1
            if not self._start():
                # every sampled candidate is tabu: the grid is exhausted
                break


def falsify(f: Formula, m: ModelSpec, g: Grid, cfg: SearchConfig) -> FalsificationResult:
    """Search for an input whose simulated trace violates ``f`` (robustness < 0)."""
    if m.input_channels is not None and set(m.input_channels) != set(g.channels):
        raise GridError(f"model {m.kind} takes input channel(s) {', '.join(m.input_channels)}")
    return _Search(f, m, g, cfg).run()


@dataclass(frozen=True)
class MiningRound:
    value: Fraction
    status: str
    simulations: int
    lo: Fraction
    hi: Fraction


def mining_rounds(
    t: TemplateInstance, free_parameter: str, lo, hi, m: ModelSpec, g: Grid, cfg: SearchConfig, iterations: int
) -> Iterator[MiningRound]:
    """Bisection on a monotone template parameter, one falsification run per round."""
    spec = template_spec(t.template_id)
    if free_parameter not in spec.monotone:
        raise TemplateError(
            f"parameter {free_parameter!r} of {spec.id} is not monotone; mineable: {', '.join(spec.monotone)}"
        )
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    lo, hi = rational(lo), rational(hi)
    if lo > hi:
        raise ValueError("lo must not exceed hi")
    for _ in range(iterations):
        mid = (lo + hi) / 2
        res = falsify(instantiate(t.with_parameter(free_parameter, mid)), m, g, cfg)
        if res.falsified:
            lo = mid
        else:
            hi = mid
        yield MiningRound(mid, res.status, res.simulations_used, lo, hi)


def mine_parameter(
    t: TemplateInstance, free_parameter: str, lo, hi, m: ModelSpec, g: Grid, cfg: SearchConfig, iterations: int
) -> float:
    """Tightest parameter value the search failed to falsify. Not a proof."""
    result = rational(hi)
    for rnd in mining_rounds(t, free_parameter, lo, hi, m, g, cfg, iterations):
        result = rnd.hi
    return float(result)
