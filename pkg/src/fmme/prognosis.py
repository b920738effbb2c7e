"""Failure-moment detection, health labels, similarity matching and
remaining-useful-life extrapolation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

MISS = "x"      # search failed
EXCLUDED = "--"  # feature rejected by the quality gate


class NoReversalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ReversalConfig:
    persist: int = 20
    reversal_frac: float = 0.1


def detect_failure(values, persist: int = 20, reversal_frac: float = 0.1) -> int:
    """1-based index where the curve turns against its dominant direction.

    The dominant direction is the sign of last - first. The failure index is
    the start of the earliest run of at least `persist` consecutive steps
    against that direction whose total excursion reaches
    ``reversal_frac * (max - min)``. Without such a run the last index is
    returned and a NoReversalWarning is issued.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.size < 2 * persist:
        raise ValueError(f"need at least {2 * persist} samples, got {a.size}")
    direction = np.sign(a[-1] - a[0]) or 1.0
    steps = direction * np.diff(a)
    need = reversal_frac * float(np.ptp(a))
    against = steps < 0
    i = 0
    n = steps.size
    while i < n:
        if not against[i]:
            i += 1
            continue
        j = i
        while j < n and against[j]:
            j += 1
        if j - i >= persist and -steps[i:j].sum() >= need:
            return i + 1
        i = j
    warnings.warn("no reversal found; using the last index", NoReversalWarning, stacklevel=2)
    return int(a.size)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def failure_time(indices) -> int:
    """Mean of the per-feature failure indices, rounded to the nearest ordinal."""
    idx = list(indices)
    if not idx:
        raise ValueError("failure_time needs at least one detected index")
    return round_half_up(sum(idx) / len(idx))


@dataclass(frozen=True)
class HealthLabelSeries:
    bearing: str
    t_failure: int

    def __post_init__(self):
        if self.t_failure < 1:
            raise ValueError(f"T_failure must be >= 1, got {self.t_failure}")

    def at(self, t):
        return (self.t_failure - np.asarray(t, dtype=np.float64)) / self.t_failure

    @property
    def labels(self) -> np.ndarray:
        """label(t) for t = 1..T_failure."""
        return self.at(np.arange(1, self.t_failure + 1))


def health_labels(t_failure: int, bearing: str = "") -> HealthLabelSeries:
    return HealthLabelSeries(bearing, int(t_failure))


def rescale(test, fault) -> np.ndarray | None:
    """Scale `test` so its first value equals `fault`'s first value.

    Opposite signs flip `test` first. Returns None when either start is zero.
    """
    t = np.asarray(test, dtype=np.float64)
    f = np.asarray(fault, dtype=np.float64)
    if t[0] == 0 or f[0] == 0:
        return None
    if np.sign(t[0]) != np.sign(f[0]):
        t = -t
    return t * (f[0] / t[0])


def match_label(value: float, fault, labels: HealthLabelSeries, delta: float = 0.05) -> float | None:
    """Label of the fault-sample time whose feature value is closest to `value`.

    Only t <= T_failure is searched. Returns None when the closest value is
    further than ``delta * (max - min)`` of the searched range.
    """
    f = np.asarray(fault, dtype=np.float64)[:labels.t_failure]
    gap = np.abs(f - value)
    t_star = int(np.argmin(gap))
    if gap[t_star] > delta * float(np.ptp(f)):
        return None
    return float(labels.at(t_star + 1))


@dataclass
class MatchLedger:
    """Cells keyed by (feature id, fault bearing): a label, MISS or EXCLUDED."""

    cells: dict[tuple[int, str], float | str] = field(default_factory=dict)

    def matched(self) -> list[float]:
        return [v for v in self.cells.values() if not isinstance(v, str)]

    @property
    def present_label(self) -> float | None:
        m = self.matched()
        return sum(m) / len(m) if m else None


class PredictionError(ValueError):
    pass


@dataclass
class RulPrediction:
    present_time: int
    present_label: float
    t_fail: float
    rul: float
    ledger: MatchLedger = field(default_factory=MatchLedger)


def predict_rul(present_time: int, present_label: float, ledger: MatchLedger | None = None) -> RulPrediction:
    """Extrapolate the line through (1, 1) and (present_time, present_label) to zero."""
    ledger = ledger or MatchLedger()
    if present_label >= 1:
        raise PredictionError(
            f"present label {present_label} shows no degradation yet; observe longer before predicting"
        )
    if present_time <= 1:
        raise PredictionError(f"present_time must exceed 1, got {present_time}")
    if present_label <= 0:
        return RulPrediction(present_time, present_label, float(present_time), 0.0, ledger)
    t_fail = 1.0 + (present_time - 1.0) / (1.0 - present_label)
    return RulPrediction(present_time, present_label, t_fail, t_fail - present_time, ledger)
