"""Threshold rules mapping cue sets to object motion classes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .cues import CueSet


class MotionClass(str, enum.Enum):
    IMMOVABLE = "immovable"
    SLIDING = "sliding"
    TIPPING = "tipping"


class TangentialClass(str, enum.Enum):
    STATIONARY = "stationary"
    MOVING_CONTACT = "moving_contact"


CLASS_ORDER = (MotionClass.IMMOVABLE, MotionClass.SLIDING, MotionClass.TIPPING)


class NotApplicableError(ValueError):
    pass


class EmptyEvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    intensity_fixed: float = 65.0
    tip_band: tuple[float, float] = (1.0, 5.0)
    tangential_eps: float = 0.15

    def __post_init__(self):
        if not 0 < self.intensity_fixed < 255:
            raise ValueError("intensity_fixed must lie in (0, 255)")
        lo, hi = self.tip_band
        if not lo < hi:
            raise ValueError("tip_band must have low < high")
        if self.tangential_eps <= 0:
            raise ValueError("tangential_eps must be > 0")


def classify_normal(cues: CueSet, th: Thresholds = Thresholds()) -> MotionClass:
    # Immovable is checked first: a pinned object pressed hard can show
    # incidental patch motion inside the tip band.
    if min(cues.intensity_mean) < th.intensity_fixed:
        return MotionClass.IMMOVABLE
    lo, hi = th.tip_band
    if any(lo <= r <= hi for r in cues.drop_rate):
        return MotionClass.TIPPING
    return MotionClass.SLIDING


def classify_tangential(horizontal_rate: float, th: Thresholds = Thresholds(),
                        tangential_travel: float | None = None) -> TangentialClass:
    """Stationary when the patch moves equal and opposite to the robot (rate -1)."""
    if tangential_travel is not None and tangential_travel == 0:
        raise NotApplicableError("no tangential robot motion over the window")
    if not math.isfinite(horizontal_rate):
        raise NotApplicableError("horizontal rate is not finite")
    if abs(horizontal_rate + 1.0) <= th.tangential_eps:
        return TangentialClass.STATIONARY
    return TangentialClass.MOVING_CONTACT


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # [true, predicted] in CLASS_ORDER

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def count(self, true: MotionClass, predicted: MotionClass) -> int:
        return int(self.counts[CLASS_ORDER.index(true), CLASS_ORDER.index(predicted)])

    def precision(self, cls: MotionClass) -> float:
        k = CLASS_ORDER.index(cls)
        col = self.counts[:, k].sum()
        return float(self.counts[k, k] / col) if col else float("nan")

    def recall(self, cls: MotionClass) -> float:
        k = CLASS_ORDER.index(cls)
        row = self.counts[k].sum()
        return float(self.counts[k, k] / row) if row else float("nan")


def evaluate(trials: Iterable[tuple[MotionClass, MotionClass]]) -> ConfusionMatrix:
    counts = np.zeros((3, 3), dtype=int)
    for true, pred in trials:
        counts[CLASS_ORDER.index(MotionClass(true)), CLASS_ORDER.index(MotionClass(pred))] += 1
    if counts.sum() == 0:
        raise EmptyEvaluationError("empty evaluation: no trials to evaluate")
    return ConfusionMatrix(counts)
