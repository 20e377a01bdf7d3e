"""Anchor generation, regression-target codecs, label assignment, and
ground-truth-to-featuremap mapping.

Spatial anchors live on a stride-16 feature grid; temporal anchors on a
stride-8 frame axis. Deltas use the usual center-offset / log-size
parametrization: tx = (gx - ax) / aw, tw = ln(gw / aw), and the temporal
analogue tc = (gc - ac) / al, tl = ln(gl / al).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .geometry import Box, Segment, Tube, VideoMeta, box_iou, _finite

SPATIAL_STRIDE = 16
TEMPORAL_STRIDE = 8

DEFAULT_SCALES = (2.0, 4.0, 8.0, 16.0)
DEFAULT_ASPECT_RATIOS = (1.0 / 3.0, 0.5, 1.0, 2.0, 3.0)
DEFAULT_TEMPORAL_SCALES = (1.0, 2.0, 4.0, 8.0, 16.0)

# Anchor labels: values >= 0 are positive and name the matched GT index.
NEGATIVE = -1
IGNORE = -2


@dataclass(frozen=True, slots=True)
class SpatialAnchorGrid:
    """Anchor layout over the spatial feature map (width/16 x height/16 cells)."""

    feature_width: int
    feature_height: int
    stride: int = SPATIAL_STRIDE
    scales: tuple[float, ...] = DEFAULT_SCALES
    aspect_ratios: tuple[float, ...] = DEFAULT_ASPECT_RATIOS

    def __post_init__(self) -> None:
        if self.feature_width < 1 or self.feature_height < 1:
            raise ValueError("feature grid must have at least one cell per side")
        if self.stride < 1:
            raise ValueError(f"stride must be positive, got {self.stride}")
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "aspect_ratios",
                           tuple(float(r) for r in self.aspect_ratios))
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("anchor scales must be a nonempty positive list")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValueError("aspect ratios must be a nonempty positive list")

    @classmethod
    def for_video(cls, meta: VideoMeta, *, stride: int = SPATIAL_STRIDE,
                  scales: Sequence[float] = DEFAULT_SCALES,
                  ratios: Sequence[float] = DEFAULT_ASPECT_RATIOS) -> "SpatialAnchorGrid":
        return cls(meta.width // stride, meta.height // stride, stride,
                   tuple(scales), tuple(ratios))

    @property
    def anchors_per_cell(self) -> int:
        return len(self.scales) * len(self.aspect_ratios)


@dataclass(frozen=True, slots=True)
class TemporalAnchorSet:
    """Anchor layout over the temporal feature axis (num_frames/8 positions).

    ``anchor_scales`` are segment lengths in feature-map units; a scale of s
    spans s * stride frames. Scale values are dataset configuration.
    """

    num_positions: int
    anchor_scales: tuple[float, ...] = DEFAULT_TEMPORAL_SCALES
    stride: int = TEMPORAL_STRIDE

    def __post_init__(self) -> None:
        if self.num_positions < 1:
            raise ValueError("temporal anchor set needs at least one position")
        object.__setattr__(self, "anchor_scales",
                           tuple(float(s) for s in self.anchor_scales))
        if not self.anchor_scales or any(s <= 0 for s in self.anchor_scales):
            raise ValueError("temporal anchor scales must be a nonempty positive list")

    @classmethod
    def for_length(cls, num_frames: int, *,
                   scales: Sequence[float] = DEFAULT_TEMPORAL_SCALES,
                   stride: int = TEMPORAL_STRIDE) -> "TemporalAnchorSet":
        return cls(max(1, num_frames // stride), tuple(scales), stride)


@dataclass(frozen=True, slots=True)
class BoxDelta:
    """Regression offsets from an anchor box to a target box."""

    tx: float
    ty: float
    tw: float
    th: float

    def __post_init__(self) -> None:
        for name in ("tx", "ty", "tw", "th"):
            object.__setattr__(self, name, _finite(getattr(self, name), f"delta {name}"))


@dataclass(frozen=True, slots=True)
class SegmentDelta:
    """Regression offsets from an anchor segment to a target segment."""

    tc: float
    tl: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "tc", _finite(self.tc, "delta tc"))
        object.__setattr__(self, "tl", _finite(self.tl, "delta tl"))


def gen_spatial_anchors(grid: SpatialAnchorGrid) -> list[Box]:
    """Enumerate every anchor box of the grid.

    Each cell centered at ((col + 0.5) * stride, (row + 0.5) * stride) carries
    one anchor per (scale, ratio) pair with area (stride * scale)^2 and
    height/width ratio equal to the aspect ratio. Anchors may extend beyond
    the image; clipping is the decoder's concern. Order is row-major over
    cells, then scale-major, then ratio.
    """
    anchors: list[Box] = []
    shapes = []
    for scale in grid.scales:
        size = grid.stride * scale
        for ratio in grid.aspect_ratios:
            w = size / math.sqrt(ratio)
            h = size * math.sqrt(ratio)
            shapes.append((w / 2.0, h / 2.0))
    for row in range(grid.feature_height):
        cy = (row + 0.5) * grid.stride
        for col in range(grid.feature_width):
            cx = (col + 0.5) * grid.stride
            for hw, hh in shapes:
                anchors.append(Box(cx - hw, cy - hh, cx + hw, cy + hh))
    return anchors


def gen_temporal_anchors(anchor_set: TemporalAnchorSet) -> list[Segment]:
    """Enumerate temporal anchor segments that fit inside the video.

    Position k is centered at (k + 0.5) * stride frames; an anchor of scale s
    spans round(s * stride) frames. Anchors that would cross either end of
    the frame range are skipped (segments cannot be clipped without moving
    their center).
    """
    num_frames = anchor_set.num_positions * anchor_set.stride
    anchors: list[Segment] = []
    for k in range(anchor_set.num_positions):
        center = (k + 0.5) * anchor_set.stride
        for scale in anchor_set.anchor_scales:
            length = max(1, round(scale * anchor_set.stride))
            start = round(center - length / 2.0)
            end = start + length
            if 0 <= start and end <= num_frames:
                anchors.append(Segment(start, end))
    return anchors


def encode_box(anchor: Box, gt: Box) -> BoxDelta:
    aw = anchor.x2 - anchor.x1
    ah = anchor.y2 - anchor.y1
    ax = anchor.x1 + 0.5 * aw
    ay = anchor.y1 + 0.5 * ah
    gw = gt.x2 - gt.x1
    gh = gt.y2 - gt.y1
    gx = gt.x1 + 0.5 * gw
    gy = gt.y1 + 0.5 * gh
    return BoxDelta((gx - ax) / aw, (gy - ay) / ah,
                    math.log(gw / aw), math.log(gh / ah))


def decode_box(anchor: Box, delta: BoxDelta,
               image: VideoMeta | None = None) -> Box | None:
    """Apply a delta to an anchor; clip to the image when one is given.

    Returns None when clipping leaves a degenerate (zero-extent) box; such
    candidates are discarded, not fatal.
    """
    aw = anchor.x2 - anchor.x1
    ah = anchor.y2 - anchor.y1
    cx = anchor.x1 + 0.5 * aw + delta.tx * aw
    cy = anchor.y1 + 0.5 * ah + delta.ty * ah
    w = aw * math.exp(delta.tw)
    h = ah * math.exp(delta.th)
    x1 = cx - 0.5 * w
    y1 = cy - 0.5 * h
    x2 = cx + 0.5 * w
    y2 = cy + 0.5 * h
    if image is not None:
        x1 = min(max(x1, 0.0), float(image.width))
        x2 = min(max(x2, 0.0), float(image.width))
        y1 = min(max(y1, 0.0), float(image.height))
        y2 = min(max(y2, 0.0), float(image.height))
    if x2 <= x1 or y2 <= y1:
        return None
    return Box(x1, y1, x2, y2)


def encode_segment(anchor: Segment, gt: Segment) -> SegmentDelta:
    al = float(anchor.length)
    ac = anchor.start + 0.5 * al
    gl = float(gt.length)
    gc = gt.start + 0.5 * gl
    return SegmentDelta((gc - ac) / al, math.log(gl / al))


def decode_segment(anchor: Segment, delta: SegmentDelta,
                   num_frames: int) -> Segment | None:
    """Apply a delta to an anchor segment, rounding to the integer frame grid.

    The result is clipped to [0, num_frames); a zero-length result is
    discarded (None).
    """
    al = float(anchor.length)
    ac = anchor.start + 0.5 * al
    center = ac + delta.tc * al
    length = al * math.exp(delta.tl)
    start = max(0, round(center - 0.5 * length))
    end = min(num_frames, round(center + 0.5 * length))
    if end <= start:
        return None
    return Segment(start, end)


def assign_anchor_labels(anchors: Sequence, gts: Sequence,
                         pos_iou: float = 0.7, neg_iou: float = 0.3,
                         overlap_fn: Callable = box_iou) -> list[int]:
    """Label every anchor positive (matched GT index), NEGATIVE, or IGNORE.

    An anchor is positive when its best overlap reaches ``pos_iou`` (matched
    to its argmax GT, ties to the lower index) or when it attains the best
    overlap achieved for some GT (so every GT that overlaps any anchor at
    all keeps at least one non-negative anchor). Anchors whose best overlap
    stays below ``neg_iou`` are negative; the remainder are ignored.

    Works for spatial anchors (boxes, the default overlap) and temporal
    anchors (pass ``overlap_fn=segment_iou``).
    """
    if pos_iou <= neg_iou:
        raise ValueError(f"pos_iou ({pos_iou}) must exceed neg_iou ({neg_iou})")
    if not gts:
        return [NEGATIVE] * len(anchors)
    labels = []
    overlaps = [[overlap_fn(anchor, gt) for gt in gts] for anchor in anchors]
    for row in overlaps:
        best = max(row)
        if best >= pos_iou:
            labels.append(row.index(best))
        elif best < neg_iou:
            labels.append(NEGATIVE)
        else:
            labels.append(IGNORE)
    # Force the best anchor(s) of each GT positive so no GT goes unsupervised;
    # a GT with zero overlap everywhere has no anchor to claim.
    for j in range(len(gts)):
        column_best = max(overlaps[i][j] for i in range(len(anchors)))
        if column_best <= 0.0:
            continue
        for i in range(len(anchors)):
            if overlaps[i][j] == column_best and labels[i] < 0:
                labels[i] = j
    return labels


def map_gt_to_featuremaps(tube: Tube, num_frames: int,
                          stride: int = TEMPORAL_STRIDE) -> list[tuple[int, Box]]:
    """Assign a supervising box to each temporal featuremap the tube crosses.

    Featuremap k covers frames [k*stride, (k+1)*stride) and has temporal
    center k*stride + (stride - 1) / 2. For every center inside the tube's
    segment, the tube box at the frame nearest the center is emitted (ties
    to the earlier frame). Videos whose length is not a multiple of the
    stride are conceptually right-padded; centers beyond the last real frame
    are dropped. Featuremaps outside every tube contribute nothing.
    """
    if tube.segment.end > num_frames:
        raise ValueError(f"tube [{tube.segment.start}, {tube.segment.end}) exceeds "
                         f"video of {num_frames} frames")
    num_maps = -(-num_frames // stride)
    half = (stride - 1) / 2.0
    out: list[tuple[int, Box]] = []
    for k in range(num_maps):
        center = k * stride + half
        if center > num_frames - 1:
            break
        if not tube.segment.contains(center):
            continue
        nearest = min(tube.segment.frames(), key=lambda t: (abs(t - center), t))
        out.append((k, tube.box_at(nearest)))
    return out
