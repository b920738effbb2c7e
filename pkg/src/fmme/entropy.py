"""Attention entropy, fluctuation dispersion entropy and their refined
composite multi-scale forms.

Both multi-scale measures pool statistics over every coarse-graining shift
of a scale. The kernels below take a stack of rows (one row per
(scale, shift) pair) so that a whole 1..20 scale profile is evaluated in a
handful of array operations. The single-scale public functions go through
the same kernels, which keeps ``rcmate(s, 1) == attention_entropy(s)`` and
``rcmfde(s, p, 1) == fde(s, p)`` exact rather than approximate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .signal_ops import as_series

KINDS = ("ATE", "FDE")
CHANNELS = ("horizontal", "vertical")


@dataclass(frozen=True)
class FdeParams:
    m: int = 2
    c: int = 5
    d: int = 1
    max_scale: int = 20
    # "coarse": each coarse-grained series is standardized by its own mean and
    # std; "original": by those of the series before coarse-graining
    normalization: str = "coarse"

    def __post_init__(self):
        if self.m < 2 or self.c < 2 or self.d < 1 or self.max_scale < 1:
            raise ValueError(f"invalid FDE parameters {self}")
        if self.normalization not in ("coarse", "original"):
            raise ValueError(f"normalization must be 'coarse' or 'original', got {self.normalization!r}")

    @property
    def n_patterns(self) -> int:
        return (2 * self.c - 1) ** (self.m - 1)

    def check_length(self, length: int) -> bool:
        """Whether the pattern count stays below floor(length / max_scale)."""
        return self.n_patterns < length // self.max_scale


@dataclass
class EntropySeries:
    bearing: str
    channel: str
    modal: int
    kind: str
    scale: int
    values: np.ndarray
    gaps: np.ndarray | None = None  # True where the window failed

    @property
    def key(self) -> tuple[str, int, str, int]:
        return (self.channel, self.modal, self.kind, self.scale)


# ---------------------------------------------------------------------------
# row stacks

@dataclass
class _RowStack:
    """Coarse-grained rows for every (scale, shift) pair, stored back to back."""

    data: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray
    group: np.ndarray  # index into the requested scales
    n_groups: int

    @property
    def n_rows(self) -> int:
        return self.lengths.size

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rows), self.lengths)


def _composite_rows(a: np.ndarray, scales) -> _RowStack:
    rows, group = [], []
    for g, tau in enumerate(scales):
        for w in range(tau):
            n = (a.size - w) // tau
            rows.append(a[w:w + n * tau].reshape(n, tau).mean(axis=1))
            group.append(g)
    lengths = np.array([r.size for r in rows])
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    return _RowStack(np.concatenate(rows), starts, lengths, np.array(group), len(scales))


def _group_mean_entropy(freq: np.ndarray, valid: np.ndarray, stack: _RowStack, log) -> np.ndarray:
    """Average per-row distributions within each group, then Shannon entropy."""
    idx = np.flatnonzero(valid)
    pooled = np.zeros((stack.n_groups, freq.shape[1]))
    np.add.at(pooled, stack.group[idx], freq[idx])
    counts = np.bincount(stack.group[idx], minlength=stack.n_groups)
    out = np.zeros(stack.n_groups)
    for g in np.flatnonzero(counts):
        q = pooled[g] / counts[g]
        q = q[q > 0]
        out[g] = 0.0 - np.sum(q * log(q))
    return out


def _interval_entropies(stack: _RowStack) -> np.ndarray:
    """Mean over the four core-point strategies of the pooled interval entropy."""
    x = stack.data
    rid = stack.row_ids()
    mid, left, right = x[1:-1], x[:-2], x[2:]
    inner = (rid[:-2] == rid[1:-1]) & (rid[2:] == rid[1:-1])
    pmax = np.flatnonzero(inner & (mid > left) & (mid > right)) + 1
    pmin = np.flatnonzero(inner & (mid < left) & (mid < right)) + 1
    rmax, rmin = rid[pmax], rid[pmin]

    def consecutive(p, r):
        same = r[1:] == r[:-1]
        return (p[1:] - p[:-1])[same], r[1:][same]

    def next_of(src, rsrc, dst, rdst):
        j = np.searchsorted(dst, src, side="right")
        ok = j < dst.size
        j, src, rsrc = j[ok], src[ok], rsrc[ok]
        same = rdst[j] == rsrc
        return (dst[j] - src)[same], rsrc[same]

    strategies = (
        next_of(pmin, rmin, pmax, rmax),  # min -> max
        consecutive(pmin, rmin),          # min -> min
        consecutive(pmax, rmax),          # max -> max
        next_of(pmax, rmax, pmin, rmin),  # max -> min
    )
    n_rows = stack.n_rows
    total = np.zeros(stack.n_groups)
    for intervals, r in strategies:
        if intervals.size == 0:
            continue
        k = int(intervals.max()) + 1
        counts = np.bincount(r * k + intervals, minlength=n_rows * k).reshape(n_rows, k)
        sums = counts.sum(axis=1)
        valid = sums > 0
        freq = np.zeros(counts.shape)
        freq[valid] = counts[valid] / sums[valid, None]
        total += _group_mean_entropy(freq, valid, stack, np.log2)
    return total / 4.0


def _pattern_entropies(stack: _RowStack, p: FdeParams, source: np.ndarray) -> np.ndarray:
    """Pooled fluctuation-dispersion pattern entropy per group (natural log)."""
    x = stack.data
    rid = stack.row_ids()
    if p.normalization == "original":
        mu = np.full(stack.n_rows, source.mean())
        dev = x - mu[rid]
        sigma = np.full(stack.n_rows, source.std())
    else:
        mu = np.add.reduceat(x, stack.starts) / stack.lengths
        dev = x - mu[rid]
        sigma = np.sqrt(np.add.reduceat(dev * dev, stack.starts) / stack.lengths)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = ndtr(dev / sigma[rid])
    # round(c*y + 0.5) with halves rounded up, clamped to 1..c
    classes = np.clip(np.floor(p.c * y + 1.0), 1, p.c)
    # zero spread: every sample sits in the middle class
    classes[sigma[rid] == 0] = (p.c + 1) // 2
    classes = classes.astype(np.int64)
    span = (p.m - 1) * p.d
    n_emb = x.size - span
    code = np.zeros(n_emb, dtype=np.int64)
    base = 2 * p.c - 1
    for k in range(p.m - 1):
        lo, hi = k * p.d, (k + 1) * p.d
        code += (classes[hi:hi + n_emb] - classes[lo:lo + n_emb] + p.c - 1) * base ** k
    ok = rid[span:] == rid[:n_emb]
    n_rows, n_pat = stack.n_rows, p.n_patterns
    counts = np.bincount(rid[:n_emb][ok] * n_pat + code[ok],
                         minlength=n_rows * n_pat).reshape(n_rows, n_pat)
    freq = counts / (stack.lengths - span)[:, None]
    return _group_mean_entropy(freq, np.ones(n_rows, bool), stack, np.log)


# ---------------------------------------------------------------------------
# public measures

def _check_scales(a: np.ndarray, scales, min_len: int, what: str):
    for tau in scales:
        if tau < 1:
            raise ValueError(f"scale must be >= 1, got {tau}")
        if (a.size - (tau - 1)) // tau < min_len:
            raise ValueError(
                f"{what}: scale {tau} leaves fewer than {min_len} samples "
                f"for series of length {a.size}"
            )


def attention_entropy(s) -> float:
    """Mean base-2 entropy of core-point intervals over the four pairing strategies.

    Core points are strict local maxima and minima. A strategy without any
    interval contributes zero.
    """
    return rcmate(s, 1)


def rcmate(s, scale: int) -> float:
    """Refined composite multi-scale attention entropy at one scale."""
    return float(rcmate_profile(s, [scale])[0])


def rcmate_profile(s, scales) -> np.ndarray:
    a = as_series(s)
    scales = list(scales)
    _check_scales(a, scales, 3, "attention entropy")
    return _interval_entropies(_composite_rows(a, scales))


def fde(s, p: FdeParams | None = None) -> float:
    """Fluctuation dispersion entropy (natural log) with normal-CDF class mapping."""
    return rcmfde(s, p, 1)


def rcmfde(s, p: FdeParams | None = None, scale: int = 1) -> float:
    """Refined composite multi-scale fluctuation dispersion entropy at one scale."""
    return float(rcmfde_profile(s, p, [scale])[0])


def rcmfde_profile(s, p: FdeParams | None, scales) -> np.ndarray:
    p = p or FdeParams()
    a = as_series(s)
    scales = list(scales)
    _check_scales(a, scales, (p.m - 1) * p.d + 2, "dispersion entropy")
    return _pattern_entropies(_composite_rows(a, scales), p, a)


def entropy_profiles(s, p: FdeParams | None = None, scales=None) -> tuple[np.ndarray, np.ndarray]:
    """(RCMATE, RCMFDE) over `scales`, sharing one stack of coarse-grained rows."""
    p = p or FdeParams()
    a = as_series(s)
    scales = list(scales or range(1, p.max_scale + 1))
    _check_scales(a, scales, max(3, (p.m - 1) * p.d + 2), "entropy profile")
    stack = _composite_rows(a, scales)
    return _interval_entropies(stack), _pattern_entropies(stack, p, a)


# ---------------------------------------------------------------------------
# per-run extraction

def window_entropies(window, p: FdeParams, scales, modal_count: int = 6, emd_cfg=None) -> np.ndarray:
    """Entropy tensor of one dual-channel window.

    Returns shape (2 channels, modal_count, 2 kinds, len(scales)); kinds are
    ordered as in KINDS.
    """
    from .emd import EmdConfig, decompose, select_modals
    import warnings

    emd_cfg = emd_cfg or EmdConfig(max_imfs=modal_count)
    w = np.asarray(window, dtype=np.float64)
    out = np.empty((2, modal_count, 2, len(scales)))
    for ch in range(2):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            modals = select_modals(decompose(w[ch], emd_cfg), modal_count)
        for k, modal in enumerate(modals):
            out[ch, k, 0], out[ch, k, 1] = entropy_profiles(modal, p, scales)
    return out


def _window_task(args):
    window, p, scales, modal_count, emd_cfg = args
    try:
        return window_entropies(window, p, scales, modal_count, emd_cfg), None
    except (ValueError, np.linalg.LinAlgError) as exc:
        return None, str(exc)


def _fill_gaps(values: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    if not gaps.any():
        return values
    if gaps.all():
        raise ValueError("every window failed")
    t = np.arange(values.size)
    out = values.copy()
    out[gaps] = np.interp(t[gaps], t[~gaps], values[~gaps])
    return out


def extract_tensor(signals, p: FdeParams | None = None, scales=None, modal_count: int = 6,
                   emd_cfg=None, jobs: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Entropy tensor (n_windows, 2, modal_count, 2, n_scales) and a per-window gap mask."""
    p = p or FdeParams()
    scales = list(scales or range(1, p.max_scale + 1))
    signals = np.asarray(signals, dtype=np.float64)
    tasks = ((w, p, scales, modal_count, emd_cfg) for w in signals)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_window_task, tasks, chunksize=16))
    else:
        results = [_window_task(t) for t in tasks]
    shape = (2, modal_count, 2, len(scales))
    tensor = np.empty((len(results),) + shape)
    gaps = np.zeros(len(results), dtype=bool)
    for i, (values, err) in enumerate(results):
        if values is None:
            gaps[i] = True
            tensor[i] = np.nan
        else:
            tensor[i] = values
    return tensor, gaps


def series_from_tensor(bearing: str, tensor: np.ndarray, gaps: np.ndarray, scales) -> list[EntropySeries]:
    out = []
    _, n_ch, n_mod, n_kind, _ = tensor.shape
    for ch in range(n_ch):
        for k in range(n_mod):
            for kind in range(n_kind):
                for j, tau in enumerate(scales):
                    values = _fill_gaps(tensor[:, ch, k, kind, j], gaps)
                    out.append(EntropySeries(bearing, CHANNELS[ch], k + 1, KINDS[kind], int(tau),
                                             values, gaps.copy()))
    return out


def extract_series(run, p: FdeParams | None = None, scales=None, modal_count: int = 6,
                   emd_cfg=None, jobs: int = 1) -> list[EntropySeries]:
    """All (channel, modal, kind, scale) entropy series of a BearingRun.

    With the defaults this is 2 x 6 x 2 x 20 = 480 series, each with one value
    per window. Windows whose computation fails are flagged in ``gaps`` and
    filled by linear interpolation so the series stay aligned.
    """
    p = p or FdeParams()
    scales = list(scales or range(1, p.max_scale + 1))
    tensor, gaps = extract_tensor(run.signals, p, scales, modal_count, emd_cfg, jobs)
    return series_from_tensor(run.id, tensor, gaps, scales)
