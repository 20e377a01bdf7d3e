"""Brute-force oracles, written from first principles with no helpers shared
with the modules they check.

``oracle_ap`` re-derives average precision by a literal score-order sweep and
exact rational staircase integration; ``oracle_iou_grid`` counts raster cells
instead of using the closed-form intersection; ``oracle_tube_st_iou``
enumerates frame memberships as sets. They exist to catch bugs in the fast
paths, so they deliberately stay slow and simple.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .geometry import Box, Segment, Tube

MAX_ORACLE_DETECTIONS = 8
MAX_ORACLE_GTS = 4


def _content_key(item: Any) -> tuple:
    if isinstance(item, Tube):
        key: tuple = (item.class_id, item.segment.start, item.segment.end)
        for b in item.boxes:
            key += (b.x1, b.y1, b.x2, b.y2)
        return key
    if isinstance(item, Box):
        return (item.x1, item.y1, item.x2, item.y2)
    if isinstance(item, Segment):
        return (item.start, item.end)
    raise TypeError(f"no ordering for {type(item).__name__}")


def oracle_ap(detections: Sequence[tuple[float, Hashable, Any]],
              gts: Sequence[tuple[Hashable, Any]],
              overlap_fn: Callable[[Any, Any], float],
              alpha: float) -> float:
    """Average precision of one class by exhaustive sweep.

    ``detections`` are (score, group, item) triples and ``gts`` are
    (group, item) pairs; matching never crosses groups. Refuses instances
    beyond 8 detections or 4 ground truths, where exhaustive checking stops
    being obviously correct by inspection.
    """
    if len(detections) > MAX_ORACLE_DETECTIONS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_DETECTIONS} detections, "
                         f"got {len(detections)}")
    if len(gts) > MAX_ORACLE_GTS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_GTS} ground truths, "
                         f"got {len(gts)}")
    if not gts:
        raise ValueError("oracle needs at least one ground truth")

    def det_key(entry: tuple[float, Hashable, Any]) -> tuple:
        score, group, item = entry
        gkey = group if isinstance(group, tuple) else (group,)
        return (-score, gkey, _content_key(item))

    swept = sorted(detections, key=det_key)
    used = [False] * len(gts)
    hits: list[bool] = []
    for _, group, item in swept:
        best_index = -1
        best_overlap = -1.0
        for j, (gt_group, gt_item) in enumerate(gts):
            if used[j] or gt_group != group:
                continue
            overlap = overlap_fn(item, gt_item)
            if overlap > best_overlap:
                best_overlap = overlap
                best_index = j
        if best_index >= 0 and best_overlap >= alpha:
            used[best_index] = True
            hits.append(True)
        else:
            hits.append(False)

    # Exact PR staircase: for each recall level reached, the envelope
    # precision is the best precision at that recall or beyond.
    num_gt = len(gts)
    tp = 0
    points: list[tuple[Fraction, Fraction]] = []
    for rank, hit in enumerate(hits, start=1):
        if hit:
            tp += 1
        points.append((Fraction(tp, num_gt), Fraction(tp, rank)))
    area = Fraction(0)
    previous = Fraction(0)
    for k, (recall, _) in enumerate(points):
        if recall == previous:
            continue
        best_precision = max(p for r, p in points[k:] if r >= recall)
        area += (recall - previous) * best_precision
        previous = recall
    return float(area)


def oracle_iou_grid(a: Box, b: Box, pitch: float = 0.5) -> float:
    """Box IoU by counting raster cells of size pitch x pitch.

    Both boxes' coordinates must be multiples of the pitch so that every
    cell is either fully inside or fully outside each box.
    """
    for value in (*a.corners(), *b.corners()):
        if abs(value / pitch - round(value / pitch)) > 1e-9:
            raise ValueError(f"coordinate {value} is not a multiple of pitch {pitch}")
    x0 = min(a.x1, b.x1)
    y0 = min(a.y1, b.y1)
    nx = round((max(a.x2, b.x2) - x0) / pitch)
    ny = round((max(a.y2, b.y2) - y0) / pitch)
    xs = x0 + (np.arange(nx) + 0.5) * pitch
    ys = y0 + (np.arange(ny) + 0.5) * pitch

    def mask(box: Box) -> np.ndarray:
        inside_x = (xs > box.x1) & (xs < box.x2)
        inside_y = (ys > box.y1) & (ys < box.y2)
        return inside_y[:, None] & inside_x[None, :]

    mask_a = mask(a)
    mask_b = mask(b)
    inter = int(np.count_nonzero(mask_a & mask_b))
    union = int(np.count_nonzero(mask_a | mask_b))
    return inter / union if union else 0.0


def oracle_tube_st_iou(a: Tube, b: Tube) -> float:
    """Tube ST-IoU by enumerating frame memberships as explicit sets."""
    frames_a = set(range(a.segment.start, a.segment.end))
    frames_b = set(range(b.segment.start, b.segment.end))
    shared = sorted(frames_a & frames_b)
    if not shared:
        return 0.0
    temporal = len(shared) / len(frames_a | frames_b)
    total = 0.0
    for t in shared:
        box_a = a.boxes[t - a.segment.start]
        box_b = b.boxes[t - b.segment.start]
        ix1 = max(box_a.x1, box_b.x1)
        iy1 = max(box_a.y1, box_b.y1)
        ix2 = min(box_a.x2, box_b.x2)
        iy2 = min(box_a.y2, box_b.y2)
        iw = ix2 - ix1
        ih = iy2 - iy1
        if iw <= 0.0 or ih <= 0.0:
            continue
        inter = iw * ih
        area_a = (box_a.x2 - box_a.x1) * (box_a.y2 - box_a.y1)
        area_b = (box_b.x2 - box_b.x1) * (box_b.y2 - box_b.y1)
        total += inter / (area_a + area_b - inter)
    return temporal * (total / len(shared))
