"""Core value types and IoU arithmetic for boxes, segments, and action tubes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


def _finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    return value


def _frame_index(value: int, what: str) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{what} must be an integer frame index, got {value!r}")
    return int(value)


@dataclass(frozen=True, slots=True)
class Box:
    """Axis-aligned rectangle in continuous pixel coordinates.

    Uses the exclusive-edge convention: area is (x2 - x1) * (y2 - y1) with no
    pixel "+1". Degenerate (zero-area) boxes are rejected at construction.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            object.__setattr__(self, name, _finite(getattr(self, name), f"box {name}"))
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise ValueError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2}): "
                "requires x2 > x1 and y2 > y1"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def corners(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True, slots=True)
class Segment:
    """Half-open temporal interval [start, end) in integer frame indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", _frame_index(self.start, "segment start"))
        object.__setattr__(self, "end", _frame_index(self.end, "segment end"))
        if self.start < 0 or self.end <= self.start:
            raise ValueError(
                f"invalid segment [{self.start}, {self.end}): requires 0 <= start < end"
            )

    @property
    def length(self) -> int:
        return self.end - self.start

    def frames(self) -> range:
        return range(self.start, self.end)

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True, slots=True)
class Tube:
    """A class-labeled, scored temporal segment with exactly one box per frame."""

    class_id: int
    score: float
    segment: Segment
    boxes: tuple[Box, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_id", _frame_index(self.class_id, "tube class_id"))
        object.__setattr__(self, "score", _finite(self.score, "tube score"))
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if len(self.boxes) != self.segment.length:
            raise ValueError(
                f"tube has {len(self.boxes)} boxes for segment of length "
                f"{self.segment.length}"
            )

    def box_at(self, frame: int) -> Box:
        """Return the box at an absolute frame index inside the segment."""
        if not self.segment.contains(frame):
            raise ValueError(f"frame {frame} outside segment "
                             f"[{self.segment.start}, {self.segment.end})")
        return self.boxes[frame - self.segment.start]


@dataclass(frozen=True, slots=True)
class VideoMeta:
    """Per-video metadata: frame count, resolution, and frame rate."""

    video_id: str
    num_frames: int
    width: int
    height: int
    fps: float

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be a nonempty string")
        for name in ("num_frames", "width", "height"):
            value = _frame_index(getattr(self, name), f"video {name}")
            if value <= 0:
                raise ValueError(f"video {name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        fps = _finite(self.fps, "video fps")
        if fps <= 0:
            raise ValueError(f"video fps must be positive, got {fps}")
        object.__setattr__(self, "fps", fps)


@dataclass(frozen=True, slots=True)
class VideoAnnotation:
    """Ground-truth tubes for one video, together with its metadata."""

    meta: VideoMeta
    tubes: tuple[Tube, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tubes", tuple(self.tubes))
        for tube in self.tubes:
            if tube.segment.end > self.meta.num_frames:
                raise ValueError(
                    f"tube [{tube.segment.start}, {tube.segment.end}) exceeds "
                    f"{self.meta.num_frames} frames of video {self.meta.video_id!r}"
                )


def box_area(b: Box) -> float:
    """Area under the exclusive-edge convention."""
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def box_iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = box_area(a) + box_area(b) - inter
    return inter / union


def segment_iou(a: Segment, b: Segment) -> float:
    """Temporal IoU on frame counts; abutting half-open segments are disjoint."""
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    union = a.length + b.length - inter
    return inter / union


def tube_st_iou(a: Tube, b: Tube) -> float:
    """Spatio-temporal IoU of two tubes in the same video coordinate frame.

    The temporal IoU of the two segments multiplied by the mean spatial IoU
    over the frames where both tubes are present. Disjoint segments give 0.0
    (the spatial mean over an empty frame set is defined as 0).
    """
    t_iou = segment_iou(a.segment, b.segment)
    if t_iou == 0.0:
        return 0.0
    lo = max(a.segment.start, b.segment.start)
    hi = min(a.segment.end, b.segment.end)
    a_boxes = a.boxes
    b_boxes = b.boxes
    a_off = a.segment.start
    b_off = b.segment.start
    total = 0.0
    for t in range(lo, hi):
        total += box_iou(a_boxes[t - a_off], b_boxes[t - b_off])
    return t_iou * (total / (hi - lo))


def union_box(boxes: Sequence[Box] | Iterable[Box]) -> Box:
    """Minimal axis-aligned envelope of a nonempty collection of boxes."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("union_box requires at least one box")
    return Box(
        min(b.x1 for b in boxes),
        min(b.y1 for b in boxes),
        max(b.x2 for b in boxes),
        max(b.y2 for b in boxes),
    )
