"""Numeric primitives shared by the entropy and feature stages.

Coarse-graining, wavelet shrinkage and repeated exponential smoothing.
All functions are pure and return new arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pywt
from scipy.signal import lfilter


def as_series(s, name: str = "series") -> np.ndarray:
    """Return `s` as a 1-D float64 array, rejecting empty or non-finite input."""
    a = np.asarray(s, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def coarse_grain(s, scale: int, shift: int = 1) -> np.ndarray:
    """Block-average `s` at `scale`, starting at 1-based offset `shift`.

    Output element i (1-based) is the mean of s[(i-1)*scale + shift .. i*scale + shift - 1],
    giving floor((L - (shift - 1)) / scale) values.

    >>> coarse_grain([1, 2, 3, 4], 2, 2)
    array([2.5])
    """
    a = as_series(s)
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if not 1 <= shift <= scale:
        raise ValueError(f"shift must lie in 1..{scale}, got {shift}")
    n = (a.size - (shift - 1)) // scale
    if n < 1:
        raise ValueError(
            f"series of length {a.size} is shorter than one block (scale={scale}, shift={shift})"
        )
    start = shift - 1
    return a[start:start + n * scale].reshape(n, scale).mean(axis=1)


@dataclass(frozen=True)
class DenoiseConfig:
    wavelet: str = "db2"  # 4-tap Daubechies
    max_level: int = 4
    mode: str = "symmetric"

    def level_for(self, length: int) -> int:
        return max(1, min(self.max_level, int(np.floor(np.log2(length))) - 2))


MIN_DENOISE_LENGTH = 8


def wavelet_denoise(s, cfg: DenoiseConfig | None = None) -> np.ndarray:
    """Soft-threshold wavelet shrinkage with the universal threshold.

    The noise level is estimated from the finest detail band as
    median(|d1|) / 0.6745 and every detail band is shrunk by
    sigma * sqrt(2 ln L). Output has the input's length.
    """
    cfg = cfg or DenoiseConfig()
    a = as_series(s)
    L = a.size
    if L < MIN_DENOISE_LENGTH:
        raise ValueError(f"wavelet_denoise needs at least {MIN_DENOISE_LENGTH} samples, got {L}")
    coeffs = pywt.wavedec(a, cfg.wavelet, mode=cfg.mode, level=cfg.level_for(L))
    sigma = np.median(np.abs(coeffs[-1])) / 0.6745
    thr = sigma * np.sqrt(2.0 * np.log(L))
    if thr > 0:
        coeffs = [coeffs[0]] + [pywt.threshold(d, thr, mode="soft") for d in coeffs[1:]]
    return pywt.waverec(coeffs, cfg.wavelet, mode=cfg.mode)[:L]


def exp_smooth(s, window: int = 50, passes: int = 3) -> np.ndarray:
    """Apply an EWMA with span `window` (alpha = 2 / (window + 1)) `passes` times.

    Each pass starts from the first sample, so constant series are fixed points
    and the output stays within [min(s), max(s)].
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    y = as_series(s)
    alpha = 2.0 / (window + 1.0)
    b, a = [alpha], [1.0, alpha - 1.0]
    for _ in range(passes):
        y, _ = lfilter(b, a, y, zi=[(1.0 - alpha) * y[0]])
    # lfilter can overshoot the input bounds by an ulp
    return np.clip(y, np.min(s), np.max(s))
