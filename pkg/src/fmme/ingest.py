"""Reading PHM 2012 (FEMTO/PRONOSTIA) vibration recordings and generating
synthetic run-to-failure bearings.

Dataset layout::

    <root>/<BearingX_Y>/acc_00001.csv   # 2560 rows: hour, minute, second, microsecond, h_acc, v_acc

Temperature files in the same directories are ignored.
"""
from __future__ import annotations

import csv
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

WINDOW_LENGTH = 2560
SAMPLE_RATE = 25600.0
WINDOW_PERIOD_S = 10
ACC_PATTERN = re.compile(r"^acc_(\d{5})\.csv$")


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class SampleWindow:
    index: int
    horizontal: np.ndarray
    vertical: np.ndarray


@dataclass(frozen=True)
class BearingRun:
    """An ordered set of dual-channel acquisitions of one bearing.

    ``signals`` has shape (n_windows, 2, window_length) with the horizontal
    channel first. Indices are 1-based acquisition ordinals (10 s apart).
    """

    id: str
    signals: np.ndarray
    indices: np.ndarray
    condition: int | None = None
    truncation_index: int | None = None
    failure_index: int | None = None

    def __post_init__(self):
        sig = np.asarray(self.signals, dtype=np.float64)
        idx = np.asarray(self.indices, dtype=np.int64)
        if sig.ndim != 3 or sig.shape[1] != 2:
            raise ValueError(f"signals must have shape (n, 2, L), got {sig.shape}")
        if idx.shape != (sig.shape[0],):
            raise ValueError("one index per window required")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("window indices must be strictly increasing")
        if not np.all(np.isfinite(sig)):
            raise ValueError(f"{self.id}: non-finite acceleration values")
        if self.truncation_index is not None and idx.size and self.truncation_index > idx[-1]:
            raise ValueError("truncation_index beyond the last window")
        sig.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.signals.shape[0]

    @property
    def window_length(self) -> int:
        return self.signals.shape[2]

    @property
    def windows(self) -> list[SampleWindow]:
        return [SampleWindow(int(i), s[0], s[1]) for i, s in zip(self.indices, self.signals)]

    def truncated(self, last_index: int) -> "BearingRun":
        """Windows up to and including `last_index`, marked as the truncation point."""
        keep = self.indices <= last_index
        return replace(self, signals=self.signals[keep], indices=self.indices[keep],
                       truncation_index=int(last_index))

    def metadata(self) -> dict:
        return {
            "id": self.id,
            "condition": self.condition,
            "truncation_index": self.truncation_index,
            "failure_index": self.failure_index,
            "window_length": self.window_length,
            "n_windows": len(self),
            "first_index": int(self.indices[0]) if len(self) else None,
            "last_index": int(self.indices[-1]) if len(self) else None,
        }


@lru_cache(maxsize=1)
def bundled_metadata() -> dict:
    text = resources.files("fmme").joinpath("data/phm2012.json").read_text()
    return json.loads(text)


def bearing_metadata(bearing_id: str) -> dict:
    """Operating condition and published failure/truncation moments; {} if unknown."""
    return dict(bundled_metadata()["bearings"].get(bearing_id, {}))


@dataclass
class DatasetManifest:
    root: Path
    bearings: dict[str, Path] = field(default_factory=dict)
    role: str = "learning"

    @classmethod
    def discover(cls, root, role: str = "learning") -> "DatasetManifest":
        root = Path(root)
        if not root.is_dir():
            raise IngestError(f"dataset root {root} is not a directory")
        found = {}
        for d in sorted(p for p in root.iterdir() if p.is_dir()):
            if any(ACC_PATTERN.match(f.name) for f in d.iterdir()):
                found[d.name] = d
        return cls(root, found, role)

    def path_for(self, bearing_id: str) -> Path:
        return self.bearings.get(bearing_id, self.root / bearing_id)


def _acc_files(directory: Path) -> list[tuple[int, Path]]:
    if not directory.is_dir():
        raise IngestError(f"missing bearing directory {directory}")
    files = []
    for f in directory.iterdir():
        m = ACC_PATTERN.match(f.name)
        if m:
            files.append((int(m.group(1)), f))
    if not files:
        raise IngestError(f"no acc_#####.csv files in {directory}")
    return sorted(files)


def read_acc_file(path: Path, window_length: int = WINDOW_LENGTH) -> np.ndarray:
    """Parse one acquisition file into a (2, window_length) array."""
    lines = Path(path).read_text().rstrip("\r\n \t").splitlines()
    if len(lines) < window_length:
        raise IngestError(f"{path}: short window ({len(lines)} rows, expected {window_length})")
    if len(lines) > window_length:
        raise IngestError(f"{path}: long window ({len(lines)} rows, expected {window_length})")
    delimiter = ";" if ";" in lines[0] and "," not in lines[0] else ","
    try:
        table = np.loadtxt(lines, delimiter=delimiter, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise IngestError(f"{path}: malformed row ({exc})") from None
    if table.shape[1] != 6:
        raise IngestError(f"{path}: expected 6 columns, found {table.shape[1]}")
    if not np.all(np.isfinite(table[:, 4:6])):
        raise IngestError(f"{path}: non-finite acceleration value")
    return np.ascontiguousarray(table[:, 4:6].T)


def load_bearing(manifest: DatasetManifest, bearing_id: str, jobs: int = 1,
                 window_length: int = WINDOW_LENGTH) -> BearingRun:
    """Load every acc file of one bearing as an ordered BearingRun."""
    files = _acc_files(manifest.path_for(bearing_id))
    paths = [p for _, p in files]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            windows = list(pool.map(lambda p: read_acc_file(p, window_length), paths))
    else:
        windows = [read_acc_file(p, window_length) for p in paths]
    meta = bearing_metadata(bearing_id)
    return BearingRun(
        bearing_id,
        np.stack(windows),
        np.arange(1, len(windows) + 1),
        condition=meta.get("condition"),
        truncation_index=meta.get("truncation_index") if meta.get("truncation_index", 0) <= len(windows) else None,
        failure_index=meta.get("failure_index"),
    )


def write_layout(run: BearingRun, root) -> Path:
    """Write `run` in the dataset's acc_#####.csv layout under root/<id>."""
    d = Path(root) / run.id
    d.mkdir(parents=True, exist_ok=True)
    L = run.window_length
    micro = np.round(np.arange(L) * 1e6 / SAMPLE_RATE, 1)
    for k, (idx, sig) in enumerate(zip(run.indices, run.signals), start=1):
        seconds = int(idx - 1) * WINDOW_PERIOD_S
        h, rem = divmod(seconds, 3600)
        m, s = divmod(rem, 60)
        with open(d / f"acc_{k:05d}.csv", "w") as fh:
            for u, a, b in zip(micro.tolist(), sig[0].tolist(), sig[1].tolist()):
                fh.write(f"{h},{m},{s},{u:g},{a!r},{b!r}\n")
    return d


# ---------------------------------------------------------------------------
# canonical archive: run.json + windows.csv

def save_run(run: BearingRun, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    meta = run.metadata()
    meta["indices"] = [int(i) for i in run.indices]
    (d / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(d / "windows.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for idx, sig in zip(run.indices, run.signals):
            for name, ch in zip(("horizontal", "vertical"), sig):
                w.writerow([int(idx), name, *map(repr, ch.tolist())])
    return d


def load_run(directory) -> BearingRun:
    d = Path(directory)
    try:
        meta = json.loads((d / "run.json").read_text())
    except FileNotFoundError:
        raise IngestError(f"no run archive in {d}") from None
    n, L = meta["n_windows"], meta["window_length"]
    sig = np.empty((n, 2, L))
    pos = {int(i): k for k, i in enumerate(meta["indices"])}
    with open(d / "windows.csv", newline="") as fh:
        for row in csv.reader(fh):
            k = pos[int(row[0])]
            sig[k, 0 if row[1] == "horizontal" else 1] = np.array(row[2:], dtype=np.float64)
    return BearingRun(meta["id"], sig, meta["indices"], meta.get("condition"),
                      meta.get("truncation_index"), meta.get("failure_index"))


# ---------------------------------------------------------------------------
# synthetic runs

@dataclass(frozen=True)
class SynthConfig:
    """Run-to-failure generator.

    Before the onset each window is white noise plus a periodic train of
    damped resonance bursts whose amplitude grows as
    ``impulse_amplitude * (i / onset_index) ** growth``. From the onset on
    the train is masked by broadband noise and the window RMS jumps by
    ``rms_jump``. Every window is rescaled to its deterministic target RMS,
    so the RMS profile is exactly non-decreasing.
    """

    n_windows: int = 1000
    window_length: int = WINDOW_LENGTH
    noise: float = 1.0
    impulse_amplitude: float = 10.0
    onset: float = 0.8
    growth: float = 1.0
    rms_jump: float = 4.0
    fault_period: float = 256.0     # samples between bursts (100 Hz at 25.6 kHz)
    resonance: float = 0.12         # cycles per sample
    decay: float = 25.0             # burst e-folding time in samples
    jitter: float = 0.01            # relative period jitter
    condition: int = 1

    def __post_init__(self):
        if self.n_windows < 1 or self.window_length < 1:
            raise ValueError("n_windows and window_length must be positive")
        if self.noise <= 0 or self.fault_period <= 0 or self.decay <= 0:
            raise ValueError("noise, fault_period and decay must be positive")
        if not 0 < self.onset <= 1:
            raise ValueError("onset must lie in (0, 1]")

    @property
    def onset_index(self) -> int:
        """Last pre-failure window (1-based); the RMS jumps at the next one."""
        return int(round(self.onset * self.n_windows))


def _burst_train(cfg: SynthConfig, rng: np.random.Generator | None) -> np.ndarray:
    L = cfg.window_length
    t = np.arange(L, dtype=np.float64)
    out = np.zeros(L)
    phase = rng.uniform(0, cfg.fault_period) if rng is not None else 0.0
    start = phase - cfg.fault_period
    while start < L:
        dt = t - start
        on = dt >= 0
        out[on] += np.exp(-dt[on] / cfg.decay) * np.sin(2 * np.pi * cfg.resonance * dt[on])
        step = cfg.fault_period
        if rng is not None and cfg.jitter:
            step *= 1.0 + cfg.jitter * rng.standard_normal()
        start += step
    return out


def synth_run(cfg: SynthConfig | None = None, seed: int = 0, bearing_id: str | None = None) -> BearingRun:
    """Deterministic synthetic degradation run (same seed and config, same bytes)."""
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(seed)
    n, L = cfg.n_windows, cfg.window_length
    onset = cfg.onset_index
    ref_ms = float(np.mean(_burst_train(cfg, None) ** 2))
    pre_end = cfg.noise ** 2 + cfg.impulse_amplitude ** 2 * ref_ms
    signals = np.empty((n, 2, L))
    for i in range(n):
        post = onset < n and i >= onset
        if post:
            amp = 0.0
            target = cfg.rms_jump * np.sqrt(pre_end) if cfg.impulse_amplitude > 0 else cfg.noise
        else:
            sev = (i / onset) ** cfg.growth if cfg.growth > 0 else 1.0
            amp = cfg.impulse_amplitude * sev
            target = np.sqrt(cfg.noise ** 2 + amp ** 2 * ref_ms)
        for ch in range(2):
            x = rng.standard_normal(L)
            if amp > 0:
                x = x + (amp / cfg.noise) * _burst_train(cfg, rng)
            rms = np.sqrt(np.mean(x * x))
            signals[i, ch] = x * (target / rms)
    return BearingRun(
        bearing_id or f"Synth_{seed}",
        signals,
        np.arange(1, n + 1),
        condition=cfg.condition,
        failure_index=onset if onset < n else None,
    )
