"""Sampled multi-channel signals and their CSV representation."""

from __future__ import annotations

import csv
import io
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from speclint.logic import format_rational


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class Trace:
    """Samples at exact rational timestamps; channel values are floats.

    Times must be strictly increasing and start at 0.
    """

    times: tuple[Fraction, ...]
    channels: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        times = tuple(Fraction(t) for t in self.times)
        chans = {name: tuple(float(v) for v in vals) for name, vals in self.channels.items()}
        if not times:
            raise TraceError("a trace needs at least one sample")
        if times[0] != 0:
            raise TraceError(f"trace must start at time 0, not {times[0]}")
        for a, b in zip(times, times[1:]):
            if b <= a:
                raise TraceError(f"times not strictly increasing at {format_rational(b)}")
        for name, vals in chans.items():
            if len(vals) != len(times):
                raise TraceError(f"channel {name!r} has {len(vals)} samples, expected {len(times)}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        return len(self.times)

    @property
    def end(self) -> Fraction:
        return self.times[-1]

    def index_of(self, t: Fraction) -> int:
        i = bisect_left(self.times, t)
        if i == len(self.times) or self.times[i] != t:
            raise TraceError(f"time {format_rational(Fraction(t))} is not a sample instant")
        return i

    def window(self, lo: Fraction, hi: Fraction) -> range:
        """Indices of samples with ``lo <= time <= hi``."""
        return range(bisect_left(self.times, lo), bisect_right(self.times, hi))

    def values(self, channel: str) -> tuple[float, ...]:
        try:
            return self.channels[channel]
        except KeyError:
            raise TraceError(f"trace has no channel {channel!r}") from None

    def to_csv(self) -> str:
        names = sorted(self.channels)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", *names])
        for i, t in enumerate(self.times):
            w.writerow([format_rational(t), *(repr(self.channels[n][i]) for n in names)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise TraceError("empty trace file")
        header = [c.strip() for c in rows[0]]
        if header[0] != "time":
            raise TraceError("first column of a trace must be 'time'")
        if len(set(header)) != len(header):
            raise TraceError("duplicate column names in trace header")
        times: list[Fraction] = []
        cols: dict[str, list[float]] = {n: [] for n in header[1:]}
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise TraceError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                times.append(Fraction(row[0].strip()))
                for name, cell in zip(header[1:], row[1:]):
                    cols[name].append(float(cell))
            except ValueError as e:
                raise TraceError(f"line {lineno}: {e}") from None
        return cls(tuple(times), {n: tuple(v) for n, v in cols.items()})

    @classmethod
    def read(cls, path: str | Path) -> "Trace":
        return cls.from_csv(Path(path).read_text())


def uniform_trace(period: Fraction, columns: Mapping[str, Sequence[float]]) -> Trace:
    """Build a trace sampled every ``period`` from 0."""
    n = len(next(iter(columns.values())))
    return Trace(tuple(k * Fraction(period) for k in range(n)), {k: tuple(v) for k, v in columns.items()})
