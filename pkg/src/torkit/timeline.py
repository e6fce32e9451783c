"""Algebra over piecewise-constant r(t) timelines.

These exact summations are the brute-force oracle against which every
closed-form TOR expression is checked. All accumulation uses ``math.fsum``
(compensated summation), so additivity properties hold to ~1 ulp.
"""
from __future__ import annotations

import csv
import io
import math
from typing import Iterable, TextIO

from .errors import UndefinedMetricError, ValidationError
from .model import RateTimeline, Segment, StageKind

CSV_HEADER = ["t_start", "t_end", "rate", "stage"]


def integrate_optimal_time(tl: RateTimeline) -> float:
    """Ideal-system time equivalent of the work in ``tl``: sum of duration*rate."""
    return math.fsum(s.duration * s.rate for s in tl)


def observed_time(tl: RateTimeline) -> float:
    """Wall-clock length of the timeline. Empty timelines are rejected."""
    if len(tl) == 0:
        raise UndefinedMetricError("empty timeline: observed time is zero, TOR undefined")
    return math.fsum(s.duration for s in tl)


def tor_of_timeline(tl: RateTimeline) -> float:
    """Training overhead ratio of a timeline: optimal time over observed time."""
    return integrate_optimal_time(tl) / observed_time(tl)


def stage_breakdown(tl: RateTimeline) -> dict[StageKind, tuple[float, float]]:
    """Per-stage totals: (time spent, time lost).

    Lost time for a segment is duration * (1 - rate); summed over all stages
    it equals observed_time - integrate_optimal_time exactly.
    """
    times: dict[StageKind, list[float]] = {}
    losses: dict[StageKind, list[float]] = {}
    for s in tl:
        times.setdefault(s.stage, []).append(s.duration)
        losses.setdefault(s.stage, []).append(s.duration * (1.0 - s.rate))
    return {k: (math.fsum(times[k]), math.fsum(losses[k])) for k in times}


def concat(timelines: Iterable[RateTimeline]) -> RateTimeline:
    """Append timelines in order. Optimal and observed time are additive."""
    segs: list[Segment] = []
    for tl in timelines:
        segs.extend(tl.segments)
    return RateTimeline(tuple(segs))


def write_csv(tl: RateTimeline, out: TextIO) -> None:
    """Export as CSV with columns t_start,t_end,rate,stage (header included)."""
    w = csv.writer(out)
    w.writerow(CSV_HEADER)
    t = 0.0
    for s in tl:
        t_next = t + s.duration
        w.writerow([repr(t), repr(t_next), repr(s.rate), str(s.stage)])
        t = t_next


def read_csv(inp: TextIO) -> RateTimeline:
    """Parse a timeline written by :func:`write_csv`."""
    reader = csv.reader(inp)
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValidationError(f"bad timeline CSV header: {header!r}")
    segs = []
    for row in reader:
        if not row:
            continue
        t0, t1, rate, stage = row
        segs.append(Segment(float(t1) - float(t0), float(rate), StageKind(stage)))
    return RateTimeline(tuple(segs))


def to_csv_string(tl: RateTimeline) -> str:
    buf = io.StringIO()
    write_csv(tl, buf)
    return buf.getvalue()
