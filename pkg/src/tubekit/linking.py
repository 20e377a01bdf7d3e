"""Test-time action-tube construction from temporal proposals and per-frame boxes.

Given a classified temporal proposal, the linker picks the highest-actionness
box at the proposal's first frame, then at every following frame greedily
keeps the candidate with maximum IoU against the previously chosen box. The
tube score is the classification score plus the mean actionness of the chosen
boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .geometry import Box, Segment, Tube, box_iou, _finite
from .suppression import ScoredBox, nms_boxes, nms_segments, top_k, ScoredSegment

DEFAULT_TEMPORAL_TOP_K = 300
DEFAULT_SPATIAL_TOP_K = 50
DEFAULT_TEMPORAL_NMS = 0.4
DEFAULT_SPATIAL_NMS = 0.2

EMPTY_FRAME_POLICIES = ("carry", "interpolate")


@dataclass(frozen=True, slots=True)
class FrameDetections:
    """Scored candidate boxes of one frame."""

    frame: int
    boxes: tuple[ScoredBox, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frame", int(self.frame))
        object.__setattr__(self, "boxes", tuple(self.boxes))
        for b in self.boxes:
            if b.frame != self.frame:
                raise ValueError(
                    f"box at frame {b.frame} grouped under frame {self.frame}")


@dataclass(frozen=True, slots=True)
class ClassifiedProposal:
    """A temporal segment refined and classified into a specific action class."""

    segment: Segment
    class_id: int
    cls_score: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_id", int(self.class_id))
        object.__setattr__(self, "cls_score", _finite(self.cls_score, "cls_score"))


class LinkError(Exception):
    """A proposal that cannot be linked into a tube."""


@dataclass(frozen=True, slots=True)
class LinkRejection:
    """Diagnostic for a proposal dropped during linking."""

    proposal: ClassifiedProposal
    reason: str


def score_tube(cls_score: float, box_scores: Sequence[float]) -> float:
    """Classification score plus the mean of the per-frame box scores."""
    if not box_scores:
        raise ValueError("score_tube requires at least one box score")
    return cls_score + sum(box_scores) / len(box_scores)


def _pick_seed(candidates: Sequence[ScoredBox]) -> ScoredBox:
    return min(candidates, key=lambda c: (-c.score, c.box.corners()))


def _pick_successor(candidates: Sequence[ScoredBox], prev: Box) -> ScoredBox:
    # Max IoU against the previous box; ties fall to higher actionness,
    # then the smaller coordinates.
    return min(candidates,
               key=lambda c: (-box_iou(c.box, prev), -c.score, c.box.corners()))


def _interpolate(a: ScoredBox, b: ScoredBox, frac: float, frame: int) -> ScoredBox:
    ax1, ay1, ax2, ay2 = a.box.corners()
    bx1, by1, bx2, by2 = b.box.corners()
    return ScoredBox(
        Box(ax1 + (bx1 - ax1) * frac, ay1 + (by1 - ay1) * frac,
            ax2 + (bx2 - ax2) * frac, ay2 + (by2 - ay2) * frac),
        a.score + (b.score - a.score) * frac,
        frame,
    )


def link_tube(proposal: ClassifiedProposal,
              frames: Mapping[int, FrameDetections],
              empty_frame: str = "carry") -> Tube:
    """Connect per-frame boxes across the proposal's segment into one tube.

    Frames with no candidates inherit the previous chosen box ("carry") or,
    with ``empty_frame="interpolate"``, are filled by corner-wise linear
    interpolation between the nearest chosen boxes (trailing gaps still
    carry). Raises LinkError when the first frame has no candidates, since
    there is no earlier box to fall back on.
    """
    if empty_frame not in EMPTY_FRAME_POLICIES:
        raise ValueError(f"unknown empty-frame policy {empty_frame!r}")
    segment = proposal.segment
    chosen: list[ScoredBox | None] = []
    prev: ScoredBox | None = None
    for t in segment.frames():
        dets = frames.get(t)
        candidates = dets.boxes if dets is not None else ()
        if not candidates:
            if prev is None:
                raise LinkError(
                    f"no detections at frame {t} and no earlier box to carry")
            chosen.append(None)
            continue
        pick = _pick_seed(candidates) if prev is None else _pick_successor(candidates, prev.box)
        chosen.append(pick)
        prev = pick

    filled: list[ScoredBox] = []
    for i, pick in enumerate(chosen):
        if pick is not None:
            filled.append(pick)
            continue
        frame = segment.start + i
        last = filled[-1]
        nxt = next(((j, c) for j, c in enumerate(chosen[i + 1:], i + 1)
                    if c is not None), None)
        if empty_frame == "interpolate" and nxt is not None:
            j, succ = nxt
            gap_start = i - 1
            frac = (i - gap_start) / (j - gap_start)
            filled.append(_interpolate(filled[-1], succ, frac, frame))
        else:
            filled.append(ScoredBox(last.box, last.score, frame))

    return Tube(
        class_id=proposal.class_id,
        score=score_tube(proposal.cls_score, [b.score for b in filled]),
        segment=segment,
        boxes=tuple(b.box for b in filled),
    )


def _suppress_frames(frames: Mapping[int, FrameDetections], nms: float,
                     k: int) -> dict[int, FrameDetections]:
    out: dict[int, FrameDetections] = {}
    for frame in sorted(frames):
        kept = top_k(nms_boxes(frames[frame].boxes, nms), k)
        out[frame] = FrameDetections(frame, tuple(kept))
    return out


def _suppress_proposals(proposals: Sequence[ClassifiedProposal], nms: float,
                        k: int) -> list[ClassifiedProposal]:
    scored = [ScoredSegment(p.segment, p.cls_score, p.class_id) for p in proposals]
    kept = top_k(nms_segments(scored, nms), k)
    return [ClassifiedProposal(s.segment, s.class_id, s.score) for s in kept]


def build_detections(
    proposals: Sequence[ClassifiedProposal],
    frames: Mapping[int, FrameDetections],
    *,
    suppress: bool = True,
    temporal_top_k: int = DEFAULT_TEMPORAL_TOP_K,
    spatial_top_k: int = DEFAULT_SPATIAL_TOP_K,
    temporal_nms: float = DEFAULT_TEMPORAL_NMS,
    spatial_nms: float = DEFAULT_SPATIAL_NMS,
    empty_frame: str = "carry",
) -> tuple[list[Tube], list[LinkRejection]]:
    """Run the full inference tail for one video: suppress, link, score, sort.

    With ``suppress`` (the default) proposals go through per-class temporal
    NMS and a top-K budget, and every frame's boxes through spatial NMS and
    their own budget, before linking; pass ``suppress=False`` when the caller
    already did. Proposals that cannot be linked are dropped and reported in
    the returned rejection list. Tubes come back sorted by descending score.
    """
    if suppress:
        proposals = _suppress_proposals(proposals, temporal_nms, temporal_top_k)
        frames = _suppress_frames(frames, spatial_nms, spatial_top_k)
    tubes: list[Tube] = []
    rejections: list[LinkRejection] = []
    for proposal in proposals:
        try:
            tubes.append(link_tube(proposal, frames, empty_frame))
        except LinkError as err:
            rejections.append(LinkRejection(proposal, str(err)))
    tubes.sort(key=lambda t: (-t.score, t.class_id, t.segment.start, t.segment.end))
    return tubes, rejections
