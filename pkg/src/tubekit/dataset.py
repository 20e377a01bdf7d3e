"""Dataset construction: union-of-object-boxes tube synthesis, ratio filters,
class balancing, and distribution statistics.

The pipeline turns raw per-frame object annotations into one ground-truth
action tube per video (the envelope of the relevant objects), keeps only
videos whose action occupies a reasonable share of the video in time and of
the frame in space, and balances the surviving classes to a fixed number of
videos each with seeded, reproducible sampling.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .geometry import (Box, Segment, Tube, VideoAnnotation, VideoMeta,
                       box_area, union_box)

DEFAULT_TEMPORAL_RANGE = (0.2, 0.8)
DEFAULT_SPATIAL_RANGE = (0.01, 0.8)
DEFAULT_VIDEOS_PER_CLASS = 300
DEFAULT_BIN_WIDTH = 0.05

SAMPLER_NAME = "mt19937.sample"  # random.Random(seed).sample, recorded in manifests


@dataclass(frozen=True, slots=True)
class FrameObjectAnnotation:
    """One object's box on one frame of a source video."""

    video_id: str
    frame: int
    object_id: str
    box: Box
    relevant: bool


@dataclass(frozen=True, slots=True)
class GroundTruthTube:
    """A synthesized action tube: a segment with one envelope box per frame."""

    segment: Segment
    boxes: tuple[Box, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if len(self.boxes) != self.segment.length:
            raise ValueError(
                f"tube has {len(self.boxes)} boxes for segment of length "
                f"{self.segment.length}")


@dataclass(frozen=True, slots=True)
class VideoCatalogEntry:
    """A video admitted to the dataset, with its tube and both ratios."""

    meta: VideoMeta
    class_label: str
    tube: GroundTruthTube
    temporal_ratio: float
    spatial_ratio: float


class SynthesisError(ValueError):
    """A video whose annotations cannot produce a tube."""


def synthesize_tube(annotations: Sequence[FrameObjectAnnotation]) -> GroundTruthTube:
    """Form one action tube from the relevant object boxes of a single video.

    The tube spans [first annotated frame, last annotated frame + 1); on
    each annotated frame the tube box is the union of the relevant boxes,
    and unannotated frames inside the span are filled by corner-wise linear
    interpolation between the nearest annotated frames.
    """
    videos = {a.video_id for a in annotations}
    if len(videos) > 1:
        raise SynthesisError(f"annotations span multiple videos: {sorted(videos)}")
    per_frame: dict[int, list[Box]] = {}
    for a in annotations:
        if a.relevant:
            per_frame.setdefault(a.frame, []).append(a.box)
    if not per_frame:
        raise SynthesisError("no relevant object annotations")
    frames = sorted(per_frame)
    envelopes = {f: union_box(per_frame[f]) for f in frames}
    start, last = frames[0], frames[-1]
    boxes: list[Box] = []
    for t in range(start, last + 1):
        if t in envelopes:
            boxes.append(envelopes[t])
            continue
        prev = max(f for f in frames if f < t)
        nxt = min(f for f in frames if f > t)
        frac = (t - prev) / (nxt - prev)
        a, b = envelopes[prev], envelopes[nxt]
        boxes.append(Box(a.x1 + (b.x1 - a.x1) * frac, a.y1 + (b.y1 - a.y1) * frac,
                         a.x2 + (b.x2 - a.x2) * frac, a.y2 + (b.y2 - a.y2) * frac))
    return GroundTruthTube(Segment(start, last + 1), tuple(boxes))


def compute_ratios(tube: GroundTruthTube, meta: VideoMeta) -> tuple[float, float]:
    """Temporal duration ratio and mean per-frame box area ratio of a tube."""
    temporal = tube.segment.length / meta.num_frames
    frame_area = meta.width * meta.height
    spatial = sum(box_area(b) / frame_area for b in tube.boxes) / len(tube.boxes)
    return temporal, spatial


def filter_video(entry: VideoCatalogEntry,
                 t_range: tuple[float, float] = DEFAULT_TEMPORAL_RANGE,
                 s_range: tuple[float, float] = DEFAULT_SPATIAL_RANGE,
                 ) -> tuple[bool, str | None]:
    """Keep a video iff both ratios fall inside their closed ranges.

    Returns (keep, reason); the reason names the failing bound ("temporal"
    or "spatial") for dropped videos.
    """
    if not t_range[0] <= entry.temporal_ratio <= t_range[1]:
        return False, "temporal"
    if not s_range[0] <= entry.spatial_ratio <= s_range[1]:
        return False, "spatial"
    return True, None


def balance_classes(catalog: Sequence[VideoCatalogEntry], n: int = DEFAULT_VIDEOS_PER_CLASS,
                    seed: int = 0) -> list[VideoCatalogEntry]:
    """Sample exactly n videos per class, dropping classes with fewer.

    Sampling is uniform without replacement and fully determined by the
    seed: classes are visited in sorted label order and each class's videos
    are sorted by id before sampling. The output is sorted by
    (class label, video id).
    """
    if n < 1:
        raise ValueError(f"videos per class must be >= 1, got {n}")
    by_class: dict[str, list[VideoCatalogEntry]] = {}
    for entry in catalog:
        by_class.setdefault(entry.class_label, []).append(entry)
    rng = random.Random(seed)
    balanced: list[VideoCatalogEntry] = []
    for label in sorted(by_class):
        entries = sorted(by_class[label], key=lambda e: e.meta.video_id)
        if len(entries) < n:
            continue
        balanced.extend(entries if len(entries) == n else rng.sample(entries, n))
    balanced.sort(key=lambda e: (e.class_label, e.meta.video_id))
    return balanced


@dataclass(frozen=True, slots=True)
class DatasetStats:
    """Histograms of the two ratios plus summary counts."""

    bin_width: float
    bin_edges: tuple[float, ...]
    temporal_hist: tuple[int, ...]
    spatial_hist: tuple[int, ...]
    num_classes: int
    num_videos: int
    mean_temporal_ratio: float
    mean_spatial_ratio: float


def dataset_stats(catalog: Sequence[VideoCatalogEntry],
                  bin_width: float = DEFAULT_BIN_WIDTH) -> DatasetStats:
    """Fixed-width histograms over [0, 1] for both ratios, plus summary means.

    Each bin is [edge, edge + width); a ratio of exactly 1.0 lands in the
    last bin. Bin counts sum to the catalog size.
    """
    if not 0.0 < bin_width <= 1.0:
        raise ValueError(f"bin width must lie in (0, 1], got {bin_width}")
    num_bins = max(1, round(1.0 / bin_width))
    edges = tuple(i * bin_width for i in range(num_bins))

    def hist(values: Iterable[float]) -> tuple[int, ...]:
        counts = [0] * num_bins
        for v in values:
            counts[min(int(v / bin_width), num_bins - 1)] += 1
        return tuple(counts)

    temporal = [e.temporal_ratio for e in catalog]
    spatial = [e.spatial_ratio for e in catalog]
    n = len(catalog)
    return DatasetStats(
        bin_width=bin_width,
        bin_edges=edges,
        temporal_hist=hist(temporal),
        spatial_hist=hist(spatial),
        num_classes=len({e.class_label for e in catalog}),
        num_videos=n,
        mean_temporal_ratio=sum(temporal) / n if n else 0.0,
        mean_spatial_ratio=sum(spatial) / n if n else 0.0,
    )


@dataclass(frozen=True, slots=True)
class DroppedVideo:
    video_id: str
    reason: str


@dataclass(frozen=True, slots=True)
class CatalogBuild:
    """Everything the build pipeline produces before serialization."""

    entries: tuple[VideoCatalogEntry, ...]
    dropped: tuple[DroppedVideo, ...]
    classes: tuple[str, ...]


def build_catalog(annotations: Sequence[FrameObjectAnnotation],
                  videos: Mapping[str, tuple[VideoMeta, str]],
                  t_range: tuple[float, float] = DEFAULT_TEMPORAL_RANGE,
                  s_range: tuple[float, float] = DEFAULT_SPATIAL_RANGE,
                  videos_per_class: int = DEFAULT_VIDEOS_PER_CLASS,
                  seed: int = 0) -> CatalogBuild:
    """Run the full construction pipeline.

    ``videos`` maps video id to (metadata, class label). Videos with
    annotations but no metadata are an error; videos whose annotations are
    all irrelevant, whose tube leaves the video bounds, or which fail a
    ratio filter are dropped with a recorded reason.
    """
    per_video: dict[str, list[FrameObjectAnnotation]] = {}
    for a in annotations:
        per_video.setdefault(a.video_id, []).append(a)
    unknown = sorted(set(per_video) - set(videos))
    if unknown:
        raise SynthesisError("annotations reference videos with no metadata: "
                             + ", ".join(unknown))
    entries: list[VideoCatalogEntry] = []
    dropped: list[DroppedVideo] = []
    for vid in sorted(per_video):
        meta, label = videos[vid]
        try:
            tube = synthesize_tube(per_video[vid])
        except SynthesisError as err:
            dropped.append(DroppedVideo(vid, str(err)))
            continue
        if tube.segment.end > meta.num_frames:
            dropped.append(DroppedVideo(
                vid, f"tube extends to frame {tube.segment.end} in a "
                     f"{meta.num_frames}-frame video"))
            continue
        temporal, spatial = compute_ratios(tube, meta)
        entry = VideoCatalogEntry(meta, label, tube, temporal, spatial)
        keep, reason = filter_video(entry, t_range, s_range)
        if keep:
            entries.append(entry)
        else:
            dropped.append(DroppedVideo(vid, f"{reason} ratio outside range"))
    kept_classes = {e.class_label for e in entries}
    balanced = balance_classes(entries, videos_per_class, seed)
    surviving = {e.class_label for e in balanced}
    for label in sorted(kept_classes - surviving):
        count = sum(1 for e in entries if e.class_label == label)
        dropped.extend(
            DroppedVideo(e.meta.video_id,
                         f"class {label!r} has only {count} videos")
            for e in entries if e.class_label == label)
    return CatalogBuild(tuple(balanced), tuple(dropped), tuple(sorted(surviving)))


def catalog_to_annotations(catalog: Sequence[VideoCatalogEntry],
                           ) -> tuple[dict[str, VideoAnnotation], dict[str, int]]:
    """Bind catalog entries to integer class ids for evaluation.

    Ids follow sorted label order. Every ground-truth tube gets score 1.0.
    """
    labels = sorted({e.class_label for e in catalog})
    class_ids = {label: i for i, label in enumerate(labels)}
    out: dict[str, VideoAnnotation] = {}
    for e in catalog:
        tube = Tube(class_ids[e.class_label], 1.0, e.tube.segment, e.tube.boxes)
        out[e.meta.video_id] = VideoAnnotation(e.meta, (tube,))
    return out, class_ids
