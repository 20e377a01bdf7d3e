"""Non-maximum suppression and top-K selection for scored boxes and segments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TypeVar

from .geometry import Box, Segment, box_iou, segment_iou, _finite


@dataclass(frozen=True, slots=True)
class ScoredBox:
    """A box with a class-agnostic actionness score in [0, 1] and a frame index."""

    box: Box
    score: float
    frame: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", _finite(self.score, "box score"))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"box score must lie in [0, 1], got {self.score}")
        object.__setattr__(self, "frame", int(self.frame))


@dataclass(frozen=True, slots=True)
class ScoredSegment:
    """A temporal segment with a confidence score and an optional class label."""

    segment: Segment
    score: float
    class_id: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", _finite(self.score, "segment score"))
        if self.class_id is not None:
            object.__setattr__(self, "class_id", int(self.class_id))


_Scored = TypeVar("_Scored", ScoredBox, ScoredSegment)


def _geom_key(item: ScoredBox | ScoredSegment) -> tuple:
    # Full-coordinate key so equal-score ordering is independent of input order.
    if isinstance(item, ScoredBox):
        return item.box.corners()
    return (item.segment.start, item.segment.end)


def _descending(items: Sequence[_Scored]) -> list[int]:
    return sorted(range(len(items)),
                  key=lambda i: (-items[i].score, _geom_key(items[i]), i))


def _check_threshold(threshold: float) -> None:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"NMS threshold must lie in (0, 1), got {threshold}")


def nms_boxes(candidates: Sequence[ScoredBox], threshold: float) -> list[ScoredBox]:
    """Greedy score-descending NMS over boxes of a single frame.

    A candidate is suppressed when its IoU with an already-kept box is
    strictly greater than ``threshold``. The survivors are returned in
    descending score order.
    """
    _check_threshold(threshold)
    if not candidates:
        return []
    frames = {c.frame for c in candidates}
    if len(frames) > 1:
        raise ValueError(f"nms_boxes expects a single frame, got frames {sorted(frames)}")
    kept: list[ScoredBox] = []
    for i in _descending(candidates):
        cand = candidates[i]
        if all(box_iou(cand.box, k.box) <= threshold for k in kept):
            kept.append(cand)
    return kept


def nms_segments(candidates: Sequence[ScoredSegment],
                 threshold: float) -> list[ScoredSegment]:
    """Greedy temporal NMS; suppression is per-class when class ids are set."""
    _check_threshold(threshold)
    kept: list[ScoredSegment] = []
    for i in _descending(candidates):
        cand = candidates[i]
        if all(segment_iou(cand.segment, k.segment) <= threshold
               for k in kept if k.class_id == cand.class_id):
            kept.append(cand)
    return kept


def top_k(candidates: Sequence[_Scored], k: int) -> list[_Scored]:
    """Keep the k best-scoring items.

    Ties are broken by the earlier geometric position (segment start /
    box x1, then the remaining coordinates) and finally by input order,
    so the result is a prefix of a stable descending sort.
    """
    if k < 1:
        raise ValueError(f"top_k requires k >= 1, got {k}")
    order = _descending(candidates)
    return [candidates[i] for i in order[:k]]
