"""Seeded synthetic corpora for property tests and acceptance runs.

Ground-truth tubes follow a constant-velocity box drift; detections are the
ground truth degraded by a configurable noise model (corner jitter, score
noise, false positives, false negatives, segment boundary jitter). All
randomness comes from one ``random.Random(seed)`` stream consumed in a fixed
order, so a seed fully determines the corpus, a noiseless spec reproduces the
ground truth exactly, and noise draws scale with their magnitude parameters
(the sigma=0 corpus and the sigma=5 corpus differ only by the scaled noise).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .geometry import Box, Segment, Tube, VideoAnnotation, VideoMeta
from .linking import ClassifiedProposal, FrameDetections
from .suppression import ScoredBox


@dataclass(frozen=True, slots=True)
class ScenarioSpec:
    """Shape and noise model of a synthetic corpus."""

    seed: int = 0
    num_videos: int = 4
    num_classes: int = 3
    num_frames: int = 64
    tubes_per_video: int = 2
    width: int = 320
    height: int = 240
    jitter_sigma: float = 0.0       # px, applied to every box corner
    score_noise: float = 0.0        # scale of gaussian noise on scores
    fp_rate: float = 0.0            # chance of one spurious tube per video
    fn_rate: float = 0.0            # chance of dropping each true tube
    boundary_jitter: int = 0        # max frames of segment boundary shift

    def __post_init__(self) -> None:
        for name in ("num_videos", "num_classes", "num_frames",
                     "tubes_per_video", "width", "height"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_frames < 8:
            raise ValueError("videos need at least 8 frames")
        for name in ("fp_rate", "fn_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.jitter_sigma < 0 or self.score_noise < 0:
            raise ValueError("noise scales must be >= 0")
        if self.boundary_jitter < 0:
            raise ValueError("boundary_jitter must be >= 0")


@dataclass(frozen=True, slots=True)
class SynthCorpus:
    """Ground truth plus the derived detector-style artifacts."""

    gts: dict[str, VideoAnnotation]
    dets: dict[str, list[Tube]]
    frame_dets: dict[str, dict[int, FrameDetections]]
    proposals: dict[str, list[ClassifiedProposal]]


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def _random_path(rng: random.Random, spec: ScenarioSpec) -> Callable[[int], Box]:
    """A constant-velocity box trajectory, clamped inside the frame."""
    w = rng.uniform(0.15, 0.35) * spec.width
    h = rng.uniform(0.15, 0.35) * spec.height
    cx0 = rng.uniform(w / 2, spec.width - w / 2)
    cy0 = rng.uniform(h / 2, spec.height - h / 2)
    vx = rng.uniform(-2.0, 2.0)
    vy = rng.uniform(-2.0, 2.0)

    def at(t: int) -> Box:
        cx = _clamp(cx0 + vx * t, w / 2, spec.width - w / 2)
        cy = _clamp(cy0 + vy * t, h / 2, spec.height - h / 2)
        return Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)

    return at


def _random_segment(rng: random.Random, num_frames: int) -> Segment:
    length = rng.randint(max(4, num_frames // 8), max(5, num_frames // 2))
    start = rng.randint(0, num_frames - length)
    return Segment(start, start + length)


def _jitter_box(box: Box, eps: tuple[float, float, float, float], sigma: float,
                spec: ScenarioSpec) -> Box:
    x1 = box.x1 + sigma * eps[0]
    y1 = box.y1 + sigma * eps[1]
    x2 = box.x2 + sigma * eps[2]
    y2 = box.y2 + sigma * eps[3]
    if x2 - x1 < 1.0:
        mid = (x1 + x2) / 2
        x1, x2 = mid - 0.5, mid + 0.5
    if y2 - y1 < 1.0:
        mid = (y1 + y2) / 2
        y1, y2 = mid - 0.5, mid + 0.5
    # Shift back inside the frame without changing the size.
    if x1 < 0:
        x2, x1 = x2 - x1, 0.0
    elif x2 > spec.width:
        x1, x2 = x1 - (x2 - spec.width), float(spec.width)
    if y1 < 0:
        y2, y1 = y2 - y1, 0.0
    elif y2 > spec.height:
        y1, y2 = y1 - (y2 - spec.height), float(spec.height)
    return Box(x1, y1, x2, y2)


def _jitter_segment(segment: Segment, rng: random.Random,
                    spec: ScenarioSpec) -> Segment:
    if spec.boundary_jitter == 0:
        return segment
    ds = rng.randint(-spec.boundary_jitter, spec.boundary_jitter)
    de = rng.randint(-spec.boundary_jitter, spec.boundary_jitter)
    start = max(0, min(segment.start + ds, spec.num_frames - 1))
    end = max(start + 1, min(segment.end + de, spec.num_frames))
    return Segment(start, end)


def generate_corpus(spec: ScenarioSpec) -> SynthCorpus:
    """Build ground truth, detections, frame detections, and proposals.

    Deterministic given the seed; with every noise knob at zero the
    detections are value-identical to the ground truth.
    """
    rng = random.Random(spec.seed)
    gts: dict[str, VideoAnnotation] = {}
    dets: dict[str, list[Tube]] = {}
    frame_dets: dict[str, dict[int, FrameDetections]] = {}
    proposals: dict[str, list[ClassifiedProposal]] = {}

    for v in range(spec.num_videos):
        vid = f"synth{v:05d}"
        meta = VideoMeta(vid, spec.num_frames, spec.width, spec.height, 12.0)
        gt_tubes: list[Tube] = []
        det_tubes: list[Tube] = []
        for i in range(spec.tubes_per_video):
            class_id = rng.randrange(spec.num_classes)
            segment = _random_segment(rng, spec.num_frames)
            path = _random_path(rng, spec)
            gt_tubes.append(Tube(class_id, 1.0, segment,
                                 tuple(path(t) for t in segment.frames())))

            # Detection for this tube. Every draw happens regardless of the
            # noise magnitudes so corpora with different sigmas share their
            # underlying randomness.
            drop = rng.random() < spec.fn_rate
            det_segment = _jitter_segment(segment, rng, spec)
            boxes = []
            for t in det_segment.frames():
                eps = (rng.gauss(0, 1), rng.gauss(0, 1),
                       rng.gauss(0, 1), rng.gauss(0, 1))
                boxes.append(_jitter_box(path(t), eps, spec.jitter_sigma, spec))
            score = _clamp(1.0 + spec.score_noise * rng.gauss(0, 1), 0.0, 1.0)
            if not drop:
                det_tubes.append(Tube(class_id, score, det_segment, tuple(boxes)))

        spurious = rng.random() < spec.fp_rate
        fp_class = rng.randrange(spec.num_classes)
        fp_segment = _random_segment(rng, spec.num_frames)
        fp_path = _random_path(rng, spec)
        fp_score = 0.1 + 0.8 * rng.random()
        if spurious:
            det_tubes.append(Tube(fp_class, fp_score, fp_segment,
                                  tuple(fp_path(t) for t in fp_segment.frames())))

        gts[vid] = VideoAnnotation(meta, tuple(gt_tubes))
        dets[vid] = det_tubes
        per_frame: dict[int, list[ScoredBox]] = {}
        for tube in det_tubes:
            actionness = _clamp(tube.score, 0.0, 1.0)
            for t in tube.segment.frames():
                per_frame.setdefault(t, []).append(
                    ScoredBox(tube.box_at(t), actionness, t))
        frame_dets[vid] = {
            t: FrameDetections(t, tuple(boxes))
            for t, boxes in sorted(per_frame.items())
        }
        proposals[vid] = [
            ClassifiedProposal(tube.segment, tube.class_id, tube.score)
            for tube in det_tubes
        ]

    return SynthCorpus(gts, dets, frame_dets, proposals)
