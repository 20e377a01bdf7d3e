"""Detection metrics: greedy matching, average precision, video / frame /
temporal mAP, and AR/AN proposal recall.

Matching is greedy in descending score order: each detection claims the
unmatched ground truth of its class (and video, or frame) with the highest
overlap, and counts as a true positive when that overlap reaches the
threshold. Average precision integrates the exact precision-recall staircase
in rational arithmetic, so equal inputs give bit-identical results no matter
how the work is split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Sequence

from .geometry import (Box, Segment, Tube, VideoAnnotation, box_iou,
                       segment_iou, tube_st_iou)
from .suppression import ScoredSegment

AP_MODES = ("all_point", "eleven_point")

DEFAULT_TEMPORAL_ALPHAS = tuple(i / 20 for i in range(10, 20))  # 0.50 .. 0.95
DEFAULT_RECALL_THRESHOLDS = DEFAULT_TEMPORAL_ALPHAS
DEFAULT_PROPOSAL_BUDGETS = tuple(range(1, 101))


class EvalError(ValueError):
    """Raised when detections and ground truth cannot be evaluated together."""


@dataclass(frozen=True, slots=True)
class MetricDetection:
    """A scored, class-labeled item inside a matching pool (video or frame)."""

    score: float
    class_id: int
    group: Hashable
    item: Any


@dataclass(frozen=True, slots=True)
class MetricTarget:
    """A ground-truth item inside a matching pool."""

    class_id: int
    group: Hashable
    item: Any


@dataclass(frozen=True, slots=True)
class MatchResult:
    """Outcome of greedy matching, in canonical detection order.

    ``order`` gives the index of each processed detection in the input list;
    ``matched_gt`` names the consumed ground-truth index for true positives
    and is None for false positives. ``gt_class_counts`` records how many
    ground truths each class has, matched or not.
    """

    order: tuple[int, ...]
    scores: tuple[float, ...]
    class_ids: tuple[int, ...]
    is_tp: tuple[bool, ...]
    matched_gt: tuple[int | None, ...]
    gt_class_counts: Mapping[int, int]


def _item_key(item: Any) -> tuple:
    if isinstance(item, Tube):
        coords: tuple = ()
        for b in item.boxes:
            coords += b.corners()
        return (item.class_id, item.segment.start, item.segment.end) + coords
    if isinstance(item, Box):
        return item.corners()
    if isinstance(item, Segment):
        return (item.start, item.end)
    raise TypeError(f"no canonical ordering for {type(item).__name__}")


def _group_key(group: Hashable) -> tuple:
    return group if isinstance(group, tuple) else (group,)


def canonical_order(detections: Sequence[MetricDetection]) -> list[int]:
    """Deterministic score-descending order, independent of input order.

    Ties on score fall to class, group, and the item's own coordinates, so
    shuffling the input can only exchange exact duplicates.
    """
    return sorted(
        range(len(detections)),
        key=lambda i: (
            -detections[i].score,
            detections[i].class_id,
            _group_key(detections[i].group),
            _item_key(detections[i].item),
        ),
    )


def match_greedy(detections: Sequence[MetricDetection],
                 gts: Sequence[MetricTarget],
                 overlap_fn: Callable[[Any, Any], float],
                 alpha: float) -> MatchResult:
    """Match detections to ground truth greedily in descending score order.

    A detection is a true positive iff the best-overlap unmatched ground
    truth of its own class and group reaches ``alpha``; the ground truth is
    then consumed. Overlap ties between ground truths fall to the lower
    index.
    """
    pools: dict[tuple[int, Hashable], list[int]] = {}
    for j, gt in enumerate(gts):
        pools.setdefault((gt.class_id, gt.group), []).append(j)
    order = canonical_order(detections)
    taken = [False] * len(gts)
    is_tp: list[bool] = []
    matched: list[int | None] = []
    for i in order:
        det = detections[i]
        best_j = None
        best_ov = -1.0
        for j in pools.get((det.class_id, det.group), ()):
            if taken[j]:
                continue
            ov = overlap_fn(det.item, gts[j].item)
            if ov > best_ov:
                best_ov = ov
                best_j = j
        if best_j is not None and best_ov >= alpha:
            taken[best_j] = True
            is_tp.append(True)
            matched.append(best_j)
        else:
            is_tp.append(False)
            matched.append(None)
    counts: dict[int, int] = {}
    for gt in gts:
        counts[gt.class_id] = counts.get(gt.class_id, 0) + 1
    return MatchResult(
        order=tuple(order),
        scores=tuple(detections[i].score for i in order),
        class_ids=tuple(detections[i].class_id for i in order),
        is_tp=tuple(is_tp),
        matched_gt=tuple(matched),
        gt_class_counts=counts,
    )


def _ap_from_flags(flags: Sequence[bool], num_gt: int, mode: str) -> float:
    # Exact rational PR integration; float only at the very end.
    if num_gt <= 0:
        raise EvalError("average precision is undefined for a class with no ground truth")
    if mode not in AP_MODES:
        raise ValueError(f"unknown AP mode {mode!r}")
    tp = 0
    points: list[tuple[Fraction, Fraction]] = []  # (recall, precision) per rank
    for rank, hit in enumerate(flags, start=1):
        if hit:
            tp += 1
        points.append((Fraction(tp, num_gt), Fraction(tp, rank)))
    if mode == "eleven_point":
        total = Fraction(0)
        for i in range(11):
            t = Fraction(i, 10)
            best = max((p for r, p in points if r >= t), default=Fraction(0))
            total += best
        return float(total / 11)
    # All-point: area under the running-max precision envelope.
    envelope: list[Fraction] = [Fraction(0)] * len(points)
    best = Fraction(0)
    for i in range(len(points) - 1, -1, -1):
        best = max(best, points[i][1])
        envelope[i] = best
    total = Fraction(0)
    prev_recall = Fraction(0)
    for i, (recall, _) in enumerate(points):
        if recall > prev_recall:
            total += (recall - prev_recall) * envelope[i]
            prev_recall = recall
    return float(total)


def average_precision(match: MatchResult, class_id: int | None = None,
                      mode: str = "all_point") -> float:
    """All-point interpolated AP for one class of a match result.

    ``class_id`` may be omitted when the match covers a single class.
    Classes with zero ground truth have no defined AP and must be excluded
    upstream.
    """
    if class_id is None:
        present = set(match.gt_class_counts)
        if len(present) != 1:
            raise EvalError("class_id is required for a multi-class match result")
        (class_id,) = present
    flags = [hit for hit, cid in zip(match.is_tp, match.class_ids) if cid == class_id]
    return _ap_from_flags(flags, match.gt_class_counts.get(class_id, 0), mode)


@dataclass(frozen=True, slots=True)
class VideoDiagnostic:
    num_detections: int
    num_gt: int


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Per-class AP table plus their unweighted mean at one threshold."""

    kind: str
    alpha: float
    per_class_ap: Mapping[int, float]
    mean_ap: float
    per_video: Mapping[str, VideoDiagnostic]


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _evaluate(kind: str, detections: Sequence[MetricDetection],
              gts: Sequence[MetricTarget], overlap_fn, alpha: float,
              mode: str, per_video: Mapping[str, VideoDiagnostic],
              threads: int = 1) -> EvalReport:
    match = match_greedy(detections, gts, overlap_fn, alpha)
    classes = sorted(c for c, n in match.gt_class_counts.items() if n > 0)

    def one(cid: int) -> float:
        return average_precision(match, cid, mode)

    if threads > 1 and len(classes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            aps = list(pool.map(one, classes))
    else:
        aps = [one(cid) for cid in classes]
    table = dict(zip(classes, aps))
    return EvalReport(kind, alpha, table, _mean(aps), dict(per_video))


def _check_videos(dets: Mapping[str, Sequence], gts: Mapping[str, VideoAnnotation],
                  what: str) -> None:
    unknown = sorted(set(dets) - set(gts))
    if unknown:
        raise EvalError(f"{what} reference videos with no metadata: "
                        + ", ".join(unknown))


def _diagnostics(dets: Mapping[str, Sequence[Tube]],
                 gts: Mapping[str, VideoAnnotation]) -> dict[str, VideoDiagnostic]:
    return {
        vid: VideoDiagnostic(len(dets.get(vid, ())), len(ann.tubes))
        for vid, ann in sorted(gts.items())
    }


def _gt_classes(gts: Mapping[str, VideoAnnotation]) -> set[int]:
    return {t.class_id for ann in gts.values() for t in ann.tubes}


def drop_unknown_classes(dets: Mapping[str, Sequence[Tube]],
                         gts: Mapping[str, VideoAnnotation],
                         ) -> tuple[dict[str, list[Tube]], set[int]]:
    """Split off detections whose class never occurs in the ground truth.

    Such detections can match nothing and their class has no defined AP;
    callers typically warn about them. Returns the cleaned detections and
    the set of dropped class ids.
    """
    known = _gt_classes(gts)
    dropped: set[int] = set()
    kept: dict[str, list[Tube]] = {}
    for vid, tubes in dets.items():
        keep = []
        for t in tubes:
            if t.class_id in known:
                keep.append(t)
            else:
                dropped.add(t.class_id)
        kept[vid] = keep
    return kept, dropped


def video_map(dets: Mapping[str, Sequence[Tube]],
              gts: Mapping[str, VideoAnnotation],
              alpha: float, mode: str = "all_point",
              threads: int = 1) -> EvalReport:
    """Video mAP at one spatio-temporal IoU threshold.

    Detections are pooled per class over the whole corpus; a detected tube
    is correct when its ST-IoU with an unmatched same-class tube of the same
    video reaches ``alpha``.
    """
    _check_videos(dets, gts, "detections")
    d = [MetricDetection(t.score, t.class_id, vid, t)
         for vid in sorted(dets) for t in dets[vid]]
    g = [MetricTarget(t.class_id, vid, t)
         for vid in sorted(gts) for t in gts[vid].tubes]
    return _evaluate("video", d, g, tube_st_iou, alpha, mode,
                     _diagnostics(dets, gts), threads)


def _explode(vid: str, tubes: Sequence[Tube], as_det: bool):
    for t in tubes:
        for frame in t.segment.frames():
            if as_det:
                yield MetricDetection(t.score, t.class_id, (vid, frame),
                                      t.box_at(frame))
            else:
                yield MetricTarget(t.class_id, (vid, frame), t.box_at(frame))


def frame_map(dets: Mapping[str, Sequence[Tube]],
              gts: Mapping[str, VideoAnnotation],
              alpha: float = 0.5, mode: str = "all_point",
              threads: int = 1, per_video: bool = False) -> EvalReport:
    """Frame mAP: tubes exploded into per-frame boxes carrying the tube score.

    Boxes are matched frame by frame at the box-IoU threshold and AP is
    pooled over the whole corpus; ``per_video=True`` instead averages
    per-video APs (classes scored only in videos where they occur).
    """
    _check_videos(dets, gts, "detections")
    if per_video:
        tables: dict[int, list[float]] = {}
        for vid in sorted(gts):
            sub = frame_map({vid: dets.get(vid, [])}, {vid: gts[vid]}, alpha,
                            mode, threads=1)
            for cid, ap in sub.per_class_ap.items():
                tables.setdefault(cid, []).append(ap)
        table = {cid: _mean(aps) for cid, aps in sorted(tables.items())}
        return EvalReport("frame", alpha, table, _mean(list(table.values())),
                          _diagnostics(dets, gts))
    d = [md for vid in sorted(dets) for md in _explode(vid, dets[vid], True)]
    g = [mt for vid in sorted(gts) for mt in _explode(vid, gts[vid].tubes, False)]
    return _evaluate("frame", d, g, box_iou, alpha, mode,
                     _diagnostics(dets, gts), threads)


def _dedup_segments(dets: Mapping[str, Sequence[Tube]]) -> list[MetricDetection]:
    # Tubes sharing a (video, class, segment) collapse to their best score.
    best: dict[tuple[str, int, int, int], float] = {}
    for vid in sorted(dets):
        for t in dets[vid]:
            key = (vid, t.class_id, t.segment.start, t.segment.end)
            if key not in best or t.score > best[key]:
                best[key] = t.score
    return [MetricDetection(score, cid, vid, Segment(s, e))
            for (vid, cid, s, e), score in sorted(best.items())]


def temporal_map(dets: Mapping[str, Sequence[Tube]],
                 gts: Mapping[str, VideoAnnotation],
                 alphas: Sequence[float] = DEFAULT_TEMPORAL_ALPHAS,
                 mode: str = "all_point",
                 threads: int = 1) -> tuple[list[EvalReport], float]:
    """Temporal mAP over the tubes' time segments, spatial extent ignored.

    Returns one report per threshold plus the unweighted mean of their mAPs.
    Identical (segment, class) detections within a video are deduplicated,
    keeping the best score.
    """
    if not alphas:
        raise ValueError("temporal_map needs at least one threshold")
    _check_videos(dets, gts, "detections")
    d = _dedup_segments(dets)
    g = [MetricTarget(t.class_id, vid, t.segment)
         for vid in sorted(gts) for t in gts[vid].tubes]
    diag = _diagnostics(dets, gts)

    def one(alpha: float) -> EvalReport:
        return _evaluate("temporal", d, g, segment_iou, alpha, mode, diag)

    if threads > 1 and len(alphas) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, alphas))
    else:
        reports = [one(a) for a in alphas]
    return reports, _mean([r.mean_ap for r in reports])


@dataclass(frozen=True, slots=True)
class RecallReport:
    """Average recall of class-agnostic proposals over a threshold sweep."""

    average_recall: float
    thresholds: tuple[float, ...]
    recall_per_threshold: tuple[float, ...]
    curve: tuple[tuple[int, float], ...]  # (proposal budget per video, AR)


def average_recall(proposals: Mapping[str, Sequence[ScoredSegment]],
                   gts: Mapping[str, VideoAnnotation],
                   thresholds: Sequence[float] = DEFAULT_RECALL_THRESHOLDS,
                   budgets: Sequence[int] = DEFAULT_PROPOSAL_BUDGETS) -> RecallReport:
    """AR of class-agnostic temporal proposals, with a recall-vs-budget curve.

    A ground truth counts as recalled at a threshold when at least one
    proposal of its video reaches that temporal IoU. The scalar AR averages
    recall over the thresholds using every proposal; the curve repeats the
    computation with only the top-N proposals per video for each budget N.
    """
    _check_videos(proposals, gts, "proposals")
    if not thresholds:
        raise ValueError("average_recall needs at least one threshold")
    num_gt = sum(len(ann.tubes) for ann in gts.values())
    if num_gt == 0:
        raise EvalError("average_recall needs at least one ground-truth tube")

    # best_after[g][n]: best tIoU for ground truth g using the first n
    # proposals of its video (score-descending, deterministic ties).
    best_after: list[list[float]] = []
    max_budget = max(budgets) if budgets else 0
    for vid in sorted(gts):
        props = sorted(proposals.get(vid, ()),
                       key=lambda p: (-p.score, p.segment.start, p.segment.end))
        for tube in gts[vid].tubes:
            running = [0.0]
            best = 0.0
            for p in props:
                best = max(best, segment_iou(tube.segment, p.segment))
                running.append(best)
            best_after.append(running)

    def ar_at(budget: int | None) -> tuple[float, list[float]]:
        per_threshold = []
        for t in thresholds:
            hit = 0
            for running in best_after:
                n = len(running) - 1 if budget is None else min(budget, len(running) - 1)
                if running[n] >= t:
                    hit += 1
            per_threshold.append(hit / num_gt)
        return _mean(per_threshold), per_threshold

    ar, per_threshold = ar_at(None)
    curve = tuple((b, ar_at(b)[0]) for b in budgets if b <= max_budget)
    return RecallReport(ar, tuple(thresholds), tuple(per_threshold), curve)
