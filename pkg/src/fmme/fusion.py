"""Laplacian-eigenmap fusion of per-modal entropy features into one
health-indicator curve, and the symmetry/monotonicity gate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist
from threadpoolctl import threadpool_limits

from .evaluation import monotonicity
from .signal_ops import exp_smooth


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class FusionConfig:
    k_neighbors: int = 10
    bandwidth: float | None = None  # None: median connected-edge distance
    smooth_window: int = 50
    smooth_passes: int = 3
    mon_min: float = 0.8
    center_max: float = 0.15


@dataclass
class Embedding:
    values: np.ndarray
    degrees: np.ndarray
    eigenvalue: float
    k_used: int
    bandwidth: float


def _knn_graph(dist: np.ndarray, k: int) -> np.ndarray:
    """Symmetric k-NN adjacency; points tied with the k-th neighbour are included."""
    n = dist.shape[0]
    off = dist + np.diag(np.full(n, np.inf))
    kth = np.partition(off, k - 1, axis=1)[:, k - 1]
    adj = (off <= kth[:, None]) | (off <= kth[None, :])
    np.fill_diagonal(adj, False)
    return adj


def laplacian_eigenmap_1d(points, k_neighbors: int = 10, bandwidth: float | None = None) -> Embedding:
    """One-dimensional Laplacian eigenmap of the rows of `points`.

    Heat-kernel weights exp(-d^2 / sigma^2) on a symmetric k-NN graph, then
    the generalized problem L f = lambda D f. The returned vector belongs to
    the smallest non-zero eigenvalue, satisfies f'Df = 1, and is oriented so
    that it correlates negatively with the row index. If the graph is
    disconnected, k is doubled (capped at n - 1) until it connects.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    dist = cdist(x, x)
    k = min(max(1, k_neighbors), n - 1)
    while True:
        adj = _knn_graph(dist, k)
        n_comp, _ = connected_components(adj, directed=False)
        if n_comp == 1:
            break
        if k == n - 1:
            raise DisconnectedGraphError("k-NN graph stays disconnected at k = n - 1")
        k = min(2 * k, n - 1)
    if bandwidth is None:
        edges = dist[np.triu(adj, 1)]
        sigma = float(np.median(edges))
        if sigma <= 0:
            positive = edges[edges > 0]
            sigma = float(np.median(positive)) if positive.size else 1.0
    else:
        sigma = float(bandwidth)
    w = np.where(adj, np.exp(-(dist / sigma) ** 2), 0.0)
    deg = w.sum(axis=1)
    lap = np.diag(deg) - w
    with threadpool_limits(1):
        vals, vecs = eigh(lap, np.diag(deg), subset_by_index=[1, 1])
    f = vecs[:, 0]
    t = np.arange(n, dtype=np.float64)
    if np.dot(t - t.mean(), f - f.mean()) > 0:
        f = -f
    return Embedding(f, deg, float(vals[0]), k, sigma)


def standardize(series) -> np.ndarray:
    a = np.asarray(series, dtype=np.float64)
    sd = a.std()
    return (a - a.mean()) / sd if sd > 0 else np.zeros_like(a)


@dataclass
class Quality:
    mon: float
    centeredness: float
    accepted: bool


def quality_gate(values, mon_min: float = 0.8, center_max: float = 0.15) -> Quality:
    """Accept a fused curve that is monotone and centred on zero.

    Centredness is |mean| / (max - min); a flat curve is rejected.
    """
    a = np.asarray(values, dtype=np.float64)
    spread = float(np.ptp(a)) if a.size else 0.0
    mon = monotonicity(a) if a.size >= 2 else 0.0
    if spread == 0:
        return Quality(mon, float("inf"), False)
    centered = abs(float(a.mean())) / spread
    return Quality(mon, centered, mon >= mon_min and centered <= center_max)


@dataclass
class FusedFeature:
    bearing: str
    channel: str
    kind: str
    values: np.ndarray
    quality: Quality
    source_scales: dict[int, int] = field(default_factory=dict)
    raw: np.ndarray | None = None  # embedding before smoothing

    @property
    def accepted(self) -> bool:
        return self.quality.accepted


def fuse(series, cfg: FusionConfig | None = None, bearing: str = "", channel: str = "",
         kind: str = "", source_scales: dict[int, int] | None = None) -> FusedFeature:
    """Fuse the six optimal-scale modal series of one (channel, kind)."""
    cfg = cfg or FusionConfig()
    series = [np.asarray(s, dtype=np.float64) for s in series]
    if len(series) < 6:
        raise ValueError(f"fusion expects 6 modal series, got {len(series)}")
    n = series[0].size
    if any(s.size != n for s in series):
        raise ValueError("modal series differ in length")
    points = np.column_stack([standardize(s) for s in series])
    emb = laplacian_eigenmap_1d(points, cfg.k_neighbors, cfg.bandwidth)
    smooth = exp_smooth(emb.values, cfg.smooth_window, cfg.smooth_passes)
    q = quality_gate(smooth, cfg.mon_min, cfg.center_max)
    return FusedFeature(bearing, channel, kind, smooth, q, dict(source_scales or {}), emb.values)
