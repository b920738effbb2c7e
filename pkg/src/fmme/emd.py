"""Empirical mode decomposition by cubic-spline sifting."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .signal_ops import as_series


class ModalPaddingWarning(UserWarning):
    """Fewer IMFs were available than requested; the residual was repeated."""


@dataclass(frozen=True)
class EmdConfig:
    sd_threshold: float = 0.2
    max_sifts: int = 10
    max_imfs: int | None = None  # None: floor(log2(L))
    mirror: int = 2


@dataclass
class ModalSet:
    imfs: np.ndarray  # (k, L), highest frequency first
    residual: np.ndarray
    degenerate: bool = False
    sift_counts: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.imfs)

    def reconstruct(self) -> np.ndarray:
        return self.imfs.sum(axis=0) + self.residual


def find_extrema(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior local maxima and minima.

    A plateau counts once, at its first sample.
    """
    d = np.diff(x)
    maxima = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0)) + 1
    minima = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0)) + 1
    return maxima, minima


def _envelope(x: np.ndarray, idx: np.ndarray, mirror: int) -> np.ndarray:
    last = x.size - 1
    left = idx[:mirror][::-1]
    right = idx[-mirror:][::-1]
    t = np.concatenate([-left, idx, 2 * last - right])
    v = np.concatenate([x[left], x[idx], x[right]])
    return CubicSpline(t, v)(np.arange(x.size))


def _sift(r: np.ndarray, cfg: EmdConfig) -> tuple[np.ndarray, int]:
    h = r
    n = 0
    for n in range(1, cfg.max_sifts + 1):
        maxima, minima = find_extrema(h)
        if maxima.size == 0 or minima.size == 0:
            break
        mean_env = 0.5 * (_envelope(h, maxima, cfg.mirror) + _envelope(h, minima, cfg.mirror))
        denom = np.dot(h, h)
        h = h - mean_env
        if denom == 0 or np.dot(mean_env, mean_env) / denom < cfg.sd_threshold:
            break
    return h, n


def decompose(s, cfg: EmdConfig | None = None) -> ModalSet:
    """Decompose `s` into intrinsic mode functions plus a residual.

    Sifting of one IMF stops when the Cauchy-type SD between successive
    sifts drops below ``cfg.sd_threshold`` or after ``cfg.max_sifts``
    iterations. The decomposition stops when the residual no longer has
    both a maximum and a minimum, when its spread is negligible, or after
    ``cfg.max_imfs`` IMFs (default floor(log2 L)).

    Inputs without extrema come back as a residual-only ModalSet with
    ``degenerate=True``.
    """
    cfg = cfg or EmdConfig()
    x = as_series(s)
    if x.size < 16:
        raise ValueError(f"EMD needs at least 16 samples, got {x.size}")
    limit = cfg.max_imfs if cfg.max_imfs is not None else int(np.log2(x.size))
    negligible = 1e-10 * np.max(np.abs(x))
    imfs: list[np.ndarray] = []
    sifts: list[int] = []
    r = x.copy()
    while len(imfs) < limit:
        maxima, minima = find_extrema(r)
        if maxima.size == 0 or minima.size == 0 or np.ptp(r) <= negligible:
            break
        imf, n = _sift(r, cfg)
        imfs.append(imf)
        sifts.append(n)
        r = r - imf
    stacked = np.array(imfs) if imfs else np.empty((0, x.size))
    # residual closes the sum exactly up to one rounding step
    residual = x - stacked.sum(axis=0) if imfs else x.copy()
    return ModalSet(stacked, residual, degenerate=not imfs, sift_counts=sifts)


def select_modals(m: ModalSet, count: int = 6) -> list[np.ndarray]:
    """First `count` IMFs; missing ones are filled with copies of the residual."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out = [imf for imf in m.imfs[:count]]
    if len(out) < count:
        warnings.warn(
            f"only {len(out)} IMFs available, padding {count - len(out)} with the residual",
            ModalPaddingWarning,
            stacklevel=2,
        )
        out.extend(m.residual.copy() for _ in range(count - len(out)))
    return out
