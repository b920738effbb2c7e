"""Pipeline configuration and its JSON form."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .emd import EmdConfig
from .entropy import FdeParams
from .evaluation import FeatureConditioning, McrWeights
from .fusion import FusionConfig
from .prognosis import ReversalConfig
from .signal_ops import DenoiseConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SmoothingConfig:
    window: int = 50
    passes: int = 3


@dataclass(frozen=True)
class GateConfig:
    mon_min: float = 0.8
    center_max: float = 0.15


@dataclass(frozen=True)
class LeConfig:
    k_neighbors: int = 10
    bandwidth: float | None = None


@dataclass(frozen=True)
class PipelineConfig:
    window_length: int = 2560
    modal_count: int = 6
    scale_count: int = 20
    fde: FdeParams = FdeParams()
    emd: EmdConfig = EmdConfig()
    smoothing: SmoothingConfig = SmoothingConfig()
    denoise: DenoiseConfig = DenoiseConfig()
    le: LeConfig = LeConfig()
    gate: GateConfig = GateConfig()
    match_delta: float = 0.05
    reversal: ReversalConfig = ReversalConfig()
    mcr_weights: McrWeights = McrWeights()

    def __post_init__(self):
        if self.window_length < 16 or self.modal_count < 1 or self.scale_count < 1:
            raise ConfigError("window_length >= 16, modal_count >= 1 and scale_count >= 1 required")
        if self.smoothing.window < 1 or self.smoothing.passes < 1:
            raise ConfigError("smoothing window and passes must be >= 1")
        if self.match_delta < 0:
            raise ConfigError("match_delta must be non-negative")
        if self.le.k_neighbors < 1:
            raise ConfigError("le.k_neighbors must be >= 1")

    @property
    def scales(self) -> list[int]:
        return list(range(1, self.scale_count + 1))

    @property
    def emd_for_modals(self) -> EmdConfig:
        # only the first modal_count IMFs are used; sifting further is wasted work
        return dataclasses.replace(self.emd, max_imfs=self.modal_count)

    @property
    def conditioning(self) -> FeatureConditioning:
        return FeatureConditioning(self.denoise, self.smoothing.window, self.smoothing.passes)

    @property
    def fusion(self) -> FusionConfig:
        return FusionConfig(self.le.k_neighbors, self.le.bandwidth, self.smoothing.window,
                            self.smoothing.passes, self.gate.mon_min, self.gate.center_max)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        try:
            return _build(cls, data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid pipeline config: {exc}") from None

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)


def _build(cls, data):
    if not isinstance(data, dict):
        raise TypeError(f"{cls.__name__} expects an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise TypeError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name) if name in fields else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value)
        else:
            kwargs[name] = value
    return cls(**kwargs)
