"""Degradation-feature quality metrics: monotonicity, correlation with time,
robustness and their weighted composite (MCR)."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .signal_ops import DenoiseConfig, as_series, exp_smooth, wavelet_denoise

ROBUSTNESS_EPS = 1e-12


def pair_counts(f) -> tuple[int, int, int]:
    """Counts of ordered pairs t1 < t2 with F(t2) > F(t1), F(t2) < F(t1) and ties.

    Uses a sorted prefix with binary search, O(n log n) comparisons.
    """
    a = as_series(f)
    seen: list[float] = []
    up = down = 0
    for i, v in enumerate(a.tolist()):
        lo = bisect.bisect_left(seen, v)
        hi = bisect.bisect_right(seen, v)
        up += lo
        down += i - hi
        seen.insert(hi, v)
    n = a.size
    return up, down, n * (n - 1) // 2 - up - down


def monotonicity(f) -> float:
    """max(Mon+, Mon-) where ties count toward both directions."""
    a = as_series(f)
    if a.size < 2:
        raise ValueError("monotonicity needs at least 2 samples")
    up, down, ties = pair_counts(a)
    total = up + down + ties
    return max(up + ties, down + ties) / total


def correlation(f) -> float:
    """Absolute Pearson correlation with the time index; 0 for a flat series."""
    a = as_series(f)
    if a.size < 2:
        raise ValueError("correlation needs at least 2 samples")
    t = np.arange(1, a.size + 1, dtype=np.float64)
    da = a - a.mean()
    dt = t - t.mean()
    denom = np.sqrt(np.dot(dt, dt) * np.dot(da, da))
    if denom == 0:
        return 0.0
    return float(min(1.0, abs(np.dot(dt, da) / denom)))


def robustness(f) -> float:
    """Mean of exp(-|(F(t) - F(median index)) / F(t)|).

    The reference is the value at 1-based index ceil(N/2). A zero sample
    divides by ROBUSTNESS_EPS instead, so its term is 1 when it equals the
    reference and vanishes otherwise.
    """
    a = as_series(f)
    ref = a[(a.size + 1) // 2 - 1]
    scale = np.where(a == 0, ROBUSTNESS_EPS, np.abs(a))
    return float(np.mean(np.exp(-np.abs(a - ref) / scale)))


@dataclass(frozen=True)
class McrWeights:
    mon: float = 0.4
    cor: float = 0.4
    rob: float = 0.2

    def __post_init__(self):
        w = (self.mon, self.cor, self.rob)
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"MCR weights must be non-negative and sum to 1, got {w}")


@dataclass(frozen=True)
class McrReport:
    mon: float
    cor: float
    rob: float
    mcr: float
    weights: McrWeights = McrWeights()
    flags: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return "zero-variance" in self.flags


def mcr(f, weights: McrWeights | None = None) -> McrReport:
    w = weights or McrWeights()
    a = as_series(f)
    mon, cor, rob = monotonicity(a), correlation(a), robustness(a)
    flags = []
    if np.ptp(a) == 0:
        flags.append("zero-variance")
    if np.any(a == 0):
        flags.append("zero-value")
    return McrReport(mon, cor, rob, w.mon * mon + w.cor * cor + w.rob * rob, w, tuple(flags))


@dataclass(frozen=True)
class FeatureConditioning:
    """Denoise then smooth; applied to every candidate before scoring."""

    denoise: DenoiseConfig = DenoiseConfig()
    smooth_window: int = 50
    smooth_passes: int = 3

    def __call__(self, values) -> np.ndarray:
        a = as_series(values)
        if a.size >= 8:
            a = wavelet_denoise(a, self.denoise)
        return exp_smooth(a, self.smooth_window, self.smooth_passes)


@dataclass
class ScaleChoice:
    scale: int
    report: McrReport
    conditioned: np.ndarray
    candidates: dict[int, McrReport] = field(default_factory=dict)


class DegenerateFeatureError(ValueError):
    pass


def best_scale(series, weights: McrWeights | None = None,
               conditioning: FeatureConditioning | None = None) -> ScaleChoice:
    """Pick the scale with the highest MCR after conditioning; ties go to the smaller scale.

    `series` is an iterable of EntropySeries (or any objects with ``scale``
    and ``values``) for one (channel, modal, kind).
    """
    conditioning = conditioning or FeatureConditioning()
    reports: dict[int, McrReport] = {}
    smoothed: dict[int, np.ndarray] = {}
    for s in sorted(series, key=lambda s: s.scale):
        smoothed[s.scale] = conditioning(s.values)
        reports[s.scale] = mcr(smoothed[s.scale], weights)
    if not reports:
        raise ValueError("best_scale needs at least one candidate")
    usable = {k: r for k, r in reports.items() if not r.degenerate}
    if not usable:
        diag = ", ".join(f"scale {k}: {r.flags}" for k, r in reports.items())
        raise DegenerateFeatureError(f"every candidate scale is degenerate ({diag})")
    top = max(r.mcr for r in usable.values())
    scale = min(k for k, r in usable.items() if r.mcr == top)
    return ScaleChoice(scale, reports[scale], smoothed[scale], reports)
