"""Configuration for anchors, inference, evaluation, and dataset building.

Defaults reproduce the reference pipeline: 300 temporal / 50 spatial proposal
budgets with 0.4 / 0.2 NMS thresholds, stride-16 spatial and stride-8
temporal feature grids, 0.2-0.8 temporal and 0.01-0.8 spatial dataset ratio
ranges, and 300 videos per class. Precedence is CLI flag > config file >
these defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import anchors as _anchors
from . import dataset as _dataset
from . import linking as _linking
from . import metrics as _metrics


def _check_unit_interval(name: str, value: float, open_interval: bool = True) -> None:
    ok = 0.0 < value < 1.0 if open_interval else 0.0 <= value <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {bounds}, got {value}")


@dataclass(frozen=True)
class AnchorConfig:
    scales: tuple[float, ...] = _anchors.DEFAULT_SCALES
    aspect_ratios: tuple[float, ...] = _anchors.DEFAULT_ASPECT_RATIOS
    temporal_scales: tuple[float, ...] = _anchors.DEFAULT_TEMPORAL_SCALES
    spatial_stride: int = _anchors.SPATIAL_STRIDE
    temporal_stride: int = _anchors.TEMPORAL_STRIDE
    pos_iou: float = 0.7
    neg_iou: float = 0.3

    def __post_init__(self) -> None:
        object.__setattr__(self, "scales", tuple(self.scales))
        object.__setattr__(self, "aspect_ratios", tuple(self.aspect_ratios))
        object.__setattr__(self, "temporal_scales", tuple(self.temporal_scales))
        _check_unit_interval("pos_iou", self.pos_iou)
        _check_unit_interval("neg_iou", self.neg_iou)
        if self.pos_iou <= self.neg_iou:
            raise ValueError("pos_iou must exceed neg_iou")
        if self.spatial_stride < 1 or self.temporal_stride < 1:
            raise ValueError("strides must be positive")


@dataclass(frozen=True)
class InferenceConfig:
    temporal_top_k: int = _linking.DEFAULT_TEMPORAL_TOP_K
    spatial_top_k: int = _linking.DEFAULT_SPATIAL_TOP_K
    temporal_nms: float = _linking.DEFAULT_TEMPORAL_NMS
    spatial_nms: float = _linking.DEFAULT_SPATIAL_NMS
    empty_frame: str = "carry"
    suppress: bool = True

    def __post_init__(self) -> None:
        if self.temporal_top_k < 1 or self.spatial_top_k < 1:
            raise ValueError("proposal budgets must be >= 1")
        _check_unit_interval("temporal_nms", self.temporal_nms)
        _check_unit_interval("spatial_nms", self.spatial_nms)
        if self.empty_frame not in _linking.EMPTY_FRAME_POLICIES:
            raise ValueError(f"empty_frame must be one of "
                             f"{_linking.EMPTY_FRAME_POLICIES}, got {self.empty_frame!r}")


@dataclass(frozen=True)
class EvalConfig:
    video_alphas: tuple[float, ...] = (0.2, 0.5)
    frame_alpha: float = 0.5
    temporal_alphas: tuple[float, ...] = _metrics.DEFAULT_TEMPORAL_ALPHAS
    ap_mode: str = "all_point"
    per_video_frame_map: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "video_alphas", tuple(self.video_alphas))
        object.__setattr__(self, "temporal_alphas", tuple(self.temporal_alphas))
        for a in (*self.video_alphas, self.frame_alpha, *self.temporal_alphas):
            _check_unit_interval("evaluation alpha", a)
        if self.ap_mode not in _metrics.AP_MODES:
            raise ValueError(f"ap_mode must be one of {_metrics.AP_MODES}, "
                             f"got {self.ap_mode!r}")


@dataclass(frozen=True)
class DatasetConfig:
    temporal_range: tuple[float, float] = _dataset.DEFAULT_TEMPORAL_RANGE
    spatial_range: tuple[float, float] = _dataset.DEFAULT_SPATIAL_RANGE
    videos_per_class: int = _dataset.DEFAULT_VIDEOS_PER_CLASS
    seed: int = 0
    bin_width: float = _dataset.DEFAULT_BIN_WIDTH

    def __post_init__(self) -> None:
        for name in ("temporal_range", "spatial_range"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (float(lo), float(hi)))
            if not 0.0 <= lo < hi <= 1.0:
                raise ValueError(f"{name} must satisfy 0 <= lo < hi <= 1, "
                                 f"got ({lo}, {hi})")
        if self.videos_per_class < 1:
            raise ValueError("videos_per_class must be >= 1")
        _check_unit_interval("bin_width", self.bin_width)


@dataclass(frozen=True)
class Config:
    anchors: AnchorConfig = field(default_factory=AnchorConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)


_SECTIONS = {
    "anchors": AnchorConfig,
    "inference": InferenceConfig,
    "eval": EvalConfig,
    "dataset": DatasetConfig,
}


def config_from_dict(data: dict[str, Any]) -> Config:
    """Build a Config from a nested dict, rejecting unknown keys."""
    sections: dict[str, Any] = {}
    for name, value in data.items():
        cls = _SECTIONS.get(name)
        if cls is None:
            raise ValueError(f"unknown config section {name!r}")
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(value) - known
        if extra:
            raise ValueError(f"unknown keys in config section {name!r}: "
                             + ", ".join(sorted(extra)))
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in value.items()}
        sections[name] = cls(**kwargs)
    return Config(**sections)


def load_config(path: str | Path) -> Config:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return config_from_dict(data)


def config_to_dict(cfg: Config) -> dict[str, Any]:
    return {name: dataclasses.asdict(getattr(cfg, name)) for name in _SECTIONS}


def override(section, **changes):
    """Apply non-None overrides to a config section."""
    real = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(section, **real) if real else section
