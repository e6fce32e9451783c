"""Splitting realized timelines into failure-repair periods.

A period is the repeating unit of the failure model: everything up to and
including one repair downtime. Periods are delimited by the end of each
maximal run of Repair segments; whatever trails the last repair is a partial
period (still counted in TOR, excluded from per-period statistics).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import RateTimeline, Segment, StageKind

FAIL_STOP = "fail_stop"
FAIL_SLOW = "fail_slow"
MIXED = "mixed"


@dataclass(frozen=True)
class PeriodRecord:
    """Lumped stage totals of one complete failure-repair period.

    ``sr_work`` and ``fs_work`` are the optimal-time equivalents
    (duration * rate) accumulated during slow recovery and degraded running,
    so that the period TOR is (sr_work + t_h + fs_work) / duration exactly.
    """

    kind: str
    t_sr: float
    sr_work: float
    t_h: float
    ckpt_time: float
    n_ckpt: int
    t_rb: float
    t_fs: float
    fs_work: float
    t_r: float

    @property
    def duration(self) -> float:
        return math.fsum((self.t_sr, self.t_h, self.ckpt_time, self.t_rb, self.t_fs, self.t_r))

    @property
    def opt_time(self) -> float:
        return math.fsum((self.sr_work, self.t_h, self.fs_work))

    @property
    def tor(self) -> float:
        return self.opt_time / self.duration

    @property
    def r_sr(self) -> float:
        return self.sr_work / self.t_sr if self.t_sr > 0 else 0.0

    @property
    def r_fs(self) -> float:
        return self.fs_work / self.t_fs if self.t_fs > 0 else 0.0

    def mtbf(self) -> float:
        """Stage-sum time-between-failures of this period.

        Fail-stop periods count recovery + healthy + checkpointing + the
        rolled-back span; fail-slow periods count recovery + healthy +
        checkpointing only (the degraded interval is excluded by definition).
        """
        base = math.fsum((self.t_sr, self.t_h, self.ckpt_time))
        if self.kind == FAIL_SLOW:
            return base
        return base + self.t_rb


def split_periods(tl: RateTimeline) -> tuple[list[list[Segment]], list[Segment]]:
    """Split into (complete periods, trailing partial segments)."""
    periods: list[list[Segment]] = []
    current: list[Segment] = []
    segs = tl.segments
    for i, s in enumerate(segs):
        current.append(s)
        ends_repair_run = s.stage is StageKind.REPAIR and (
            i + 1 == len(segs) or segs[i + 1].stage is not StageKind.REPAIR
        )
        if ends_repair_run:
            periods.append(current)
            current = []
    return periods, current


def classify_period(segments: list[Segment]) -> str:
    has_rb = any(s.stage is StageKind.ROLLBACK_WASTE for s in segments)
    has_fs = any(s.stage is StageKind.FAIL_SLOW_DEGRADED for s in segments)
    if has_rb and has_fs:
        return MIXED
    if has_fs:
        return FAIL_SLOW
    # No marker means the rolled-back span happened to be empty; treat as
    # fail-stop (indistinguishable from a zero-length degradation).
    return FAIL_STOP


def summarize_period(segments: list[Segment]) -> PeriodRecord:
    by_stage: dict[StageKind, list[float]] = {k: [] for k in StageKind}
    sr_work: list[float] = []
    fs_work: list[float] = []
    n_ckpt = 0
    prev_stage = None
    for s in segments:
        by_stage[s.stage].append(s.duration)
        if s.stage is StageKind.SLOW_RECOVERY:
            sr_work.append(s.duration * s.rate)
        elif s.stage is StageKind.FAIL_SLOW_DEGRADED:
            fs_work.append(s.duration * s.rate)
        if s.stage is StageKind.CHECKPOINT_SAVE and prev_stage is not StageKind.CHECKPOINT_SAVE:
            n_ckpt += 1
        prev_stage = s.stage
    return PeriodRecord(
        kind=classify_period(segments),
        t_sr=math.fsum(by_stage[StageKind.SLOW_RECOVERY]),
        sr_work=math.fsum(sr_work),
        t_h=math.fsum(by_stage[StageKind.HEALTHY_RUN]),
        ckpt_time=math.fsum(by_stage[StageKind.CHECKPOINT_SAVE]),
        n_ckpt=n_ckpt,
        t_rb=math.fsum(by_stage[StageKind.ROLLBACK_WASTE]),
        t_fs=math.fsum(by_stage[StageKind.FAIL_SLOW_DEGRADED]),
        fs_work=math.fsum(fs_work),
        t_r=math.fsum(by_stage[StageKind.REPAIR]),
    )


def period_records(tl: RateTimeline) -> list[PeriodRecord]:
    periods, _ = split_periods(tl)
    return [summarize_period(p) for p in periods]


@dataclass(frozen=True)
class PeriodMeans:
    """Arithmetic means of the lumped stage totals over complete periods."""

    kind: str
    n_periods: int
    t_sr: float
    sr_work: float
    t_h: float
    ckpt_time: float
    t_rb: float
    t_fs: float
    fs_work: float
    t_r: float

    @property
    def duration(self) -> float:
        return math.fsum((self.t_sr, self.t_h, self.ckpt_time, self.t_rb, self.t_fs, self.t_r))

    @property
    def tor(self) -> float:
        """Closed-form TOR at the realized per-period means.

        Numerator and denominator are linear in the per-period times, so this
        equals the TOR of the concatenated complete periods exactly.
        """
        return math.fsum((self.sr_work, self.t_h, self.fs_work)) / self.duration

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_periods": self.n_periods,
            "t_sr": self.t_sr,
            "r_sr": self.sr_work / self.t_sr if self.t_sr > 0 else 0.0,
            "t_h": self.t_h,
            "ckpt_time": self.ckpt_time,
            "t_rb": self.t_rb,
            "t_fs": self.t_fs,
            "r_fs": self.fs_work / self.t_fs if self.t_fs > 0 else 0.0,
            "t_r": self.t_r,
        }


def mean_periods(records: list[PeriodRecord]) -> PeriodMeans | None:
    if not records:
        return None
    kinds = {r.kind for r in records}
    kind = kinds.pop() if len(kinds) == 1 else MIXED
    n = len(records)

    def m(attr: str) -> float:
        return math.fsum(getattr(r, attr) for r in records) / n

    return PeriodMeans(
        kind=kind,
        n_periods=n,
        t_sr=m("t_sr"),
        sr_work=m("sr_work"),
        t_h=m("t_h"),
        ckpt_time=m("ckpt_time"),
        t_rb=m("t_rb"),
        t_fs=m("t_fs"),
        fs_work=m("fs_work"),
        t_r=m("t_r"),
    )
