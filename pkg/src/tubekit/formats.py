"""Line-delimited JSON formats for every pipeline artifact.

Each record carries a ``schema`` field of the form ``"<kind>/<major>"``;
readers reject records whose kind does not match or whose major version is
unknown, and report the offending file and line. Writers are atomic
(temp-then-rename) and emit one record per line with keys in a fixed order,
so identical data always produces identical bytes.

Record kinds:

- ``object_annotations``: per-frame object boxes feeding the dataset builder.
- ``videos``: video metadata plus the class label of its action.
- ``catalog``: one admitted dataset video with its tube and ratios.
- ``video_annotations``: ground truth, one video per line (metadata + tubes).
- ``tubes``: detected action tubes.
- ``frame_detections``: scored per-frame boxes, one (video, frame) per line.
- ``proposals``: classified temporal segment proposals.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator

from .dataset import FrameObjectAnnotation, GroundTruthTube, VideoCatalogEntry
from .geometry import Box, Segment, Tube, VideoAnnotation, VideoMeta
from .linking import ClassifiedProposal, FrameDetections
from .suppression import ScoredBox

MAJOR_VERSIONS = {
    "object_annotations": 1,
    "videos": 1,
    "catalog": 1,
    "video_annotations": 1,
    "tubes": 1,
    "frame_detections": 1,
    "proposals": 1,
    "report": 1,
    "manifest": 1,
    "scenario": 1,
}


class InputError(ValueError):
    """Malformed or unsupported input data; maps to CLI exit code 1."""


def schema_tag(kind: str) -> str:
    return f"{kind}/{MAJOR_VERSIONS[kind]}"


def check_schema(record: dict, kind: str, where: str) -> None:
    tag = record.get("schema")
    if not isinstance(tag, str) or "/" not in tag:
        raise InputError(f"{where}: missing or malformed schema field")
    name, _, major = tag.partition("/")
    if name != kind:
        raise InputError(f"{where}: expected {kind!r} record, got {name!r}")
    if not major.isdigit() or int(major) != MAJOR_VERSIONS[kind]:
        raise InputError(f"{where}: unsupported {name} major version {major!r} "
                         f"(supported: {MAJOR_VERSIONS[kind]})")


def read_jsonl(path: str | Path) -> Iterator[tuple[str, dict]]:
    """Yield ("file:line", record) pairs; malformed lines raise InputError."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise InputError(f"{where}: invalid JSON: {err.msg}") from err
            if not isinstance(record, dict):
                raise InputError(f"{where}: expected a JSON object")
            yield where, record


def _dump(record: dict) -> str:
    return json.dumps(record, allow_nan=False, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    """Write records atomically: a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(_dump(record))
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, obj: Any) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, allow_nan=False, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _box(values: Any, where: str) -> Box:
    try:
        x1, y1, x2, y2 = values
        return Box(float(x1), float(y1), float(x2), float(y2))
    except (TypeError, ValueError) as err:
        raise InputError(f"{where}: bad box {values!r}: {err}") from err


def _segment(values: Any, where: str) -> Segment:
    try:
        start, end = values
        return Segment(int(start), int(end))
    except (TypeError, ValueError) as err:
        raise InputError(f"{where}: bad segment {values!r}: {err}") from err


def _field(record: dict, name: str, where: str) -> Any:
    try:
        return record[name]
    except KeyError:
        raise InputError(f"{where}: missing field {name!r}") from None


# --- object annotations -----------------------------------------------------

def object_annotation_record(a: FrameObjectAnnotation) -> dict:
    return {
        "schema": schema_tag("object_annotations"),
        "video_id": a.video_id,
        "frame": a.frame,
        "object_id": a.object_id,
        "box": list(a.box.corners()),
        "relevant": a.relevant,
    }


def parse_object_annotation(record: dict, where: str) -> FrameObjectAnnotation:
    check_schema(record, "object_annotations", where)
    try:
        return FrameObjectAnnotation(
            video_id=str(_field(record, "video_id", where)),
            frame=int(_field(record, "frame", where)),
            object_id=str(_field(record, "object_id", where)),
            box=_box(_field(record, "box", where), where),
            relevant=bool(_field(record, "relevant", where)),
        )
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err


# --- videos -------------------------------------------------------------------

def video_record(meta: VideoMeta, class_label: str) -> dict:
    return {
        "schema": schema_tag("videos"),
        "video_id": meta.video_id,
        "num_frames": meta.num_frames,
        "width": meta.width,
        "height": meta.height,
        "fps": meta.fps,
        "class_label": class_label,
    }


def parse_video(record: dict, where: str) -> tuple[VideoMeta, str]:
    check_schema(record, "videos", where)
    try:
        meta = VideoMeta(
            video_id=str(_field(record, "video_id", where)),
            num_frames=int(_field(record, "num_frames", where)),
            width=int(_field(record, "width", where)),
            height=int(_field(record, "height", where)),
            fps=float(_field(record, "fps", where)),
        )
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err
    return meta, str(_field(record, "class_label", where))


# --- catalog -----------------------------------------------------------------

def catalog_record(entry: VideoCatalogEntry) -> dict:
    return {
        "schema": schema_tag("catalog"),
        "video_id": entry.meta.video_id,
        "class_label": entry.class_label,
        "num_frames": entry.meta.num_frames,
        "width": entry.meta.width,
        "height": entry.meta.height,
        "fps": entry.meta.fps,
        "segment": [entry.tube.segment.start, entry.tube.segment.end],
        "boxes": [list(b.corners()) for b in entry.tube.boxes],
        "temporal_ratio": entry.temporal_ratio,
        "spatial_ratio": entry.spatial_ratio,
    }


def parse_catalog_entry(record: dict, where: str) -> VideoCatalogEntry:
    check_schema(record, "catalog", where)
    try:
        meta = VideoMeta(
            video_id=str(_field(record, "video_id", where)),
            num_frames=int(_field(record, "num_frames", where)),
            width=int(_field(record, "width", where)),
            height=int(_field(record, "height", where)),
            fps=float(_field(record, "fps", where)),
        )
        tube = GroundTruthTube(
            _segment(_field(record, "segment", where), where),
            tuple(_box(b, where) for b in _field(record, "boxes", where)),
        )
        return VideoCatalogEntry(
            meta=meta,
            class_label=str(_field(record, "class_label", where)),
            tube=tube,
            temporal_ratio=float(_field(record, "temporal_ratio", where)),
            spatial_ratio=float(_field(record, "spatial_ratio", where)),
        )
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err


# --- tubes and ground truth ----------------------------------------------------

def _tube_body(tube: Tube) -> dict:
    return {
        "class_id": tube.class_id,
        "score": tube.score,
        "segment": [tube.segment.start, tube.segment.end],
        "boxes": [list(b.corners()) for b in tube.boxes],
    }


def _parse_tube_body(record: dict, where: str) -> Tube:
    try:
        return Tube(
            class_id=int(_field(record, "class_id", where)),
            score=float(_field(record, "score", where)),
            segment=_segment(_field(record, "segment", where), where),
            boxes=tuple(_box(b, where) for b in _field(record, "boxes", where)),
        )
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err


def tube_record(video_id: str, tube: Tube) -> dict:
    return {"schema": schema_tag("tubes"), "video_id": video_id, **_tube_body(tube)}


def parse_tube(record: dict, where: str) -> tuple[str, Tube]:
    check_schema(record, "tubes", where)
    return str(_field(record, "video_id", where)), _parse_tube_body(record, where)


def video_annotation_record(annotation: VideoAnnotation) -> dict:
    meta = annotation.meta
    return {
        "schema": schema_tag("video_annotations"),
        "video_id": meta.video_id,
        "num_frames": meta.num_frames,
        "width": meta.width,
        "height": meta.height,
        "fps": meta.fps,
        "tubes": [_tube_body(t) for t in annotation.tubes],
    }


def parse_video_annotation(record: dict, where: str) -> VideoAnnotation:
    check_schema(record, "video_annotations", where)
    try:
        meta = VideoMeta(
            video_id=str(_field(record, "video_id", where)),
            num_frames=int(_field(record, "num_frames", where)),
            width=int(_field(record, "width", where)),
            height=int(_field(record, "height", where)),
            fps=float(_field(record, "fps", where)),
        )
        tubes = tuple(_parse_tube_body(t, where)
                      for t in _field(record, "tubes", where))
        return VideoAnnotation(meta, tubes)
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err


# --- frame detections ----------------------------------------------------------

def frame_detections_record(video_id: str, dets: FrameDetections) -> dict:
    return {
        "schema": schema_tag("frame_detections"),
        "video_id": video_id,
        "frame": dets.frame,
        "boxes": [{"box": list(b.box.corners()), "score": b.score}
                  for b in dets.boxes],
    }


def parse_frame_detections(record: dict, where: str) -> tuple[str, FrameDetections]:
    check_schema(record, "frame_detections", where)
    frame = int(_field(record, "frame", where))
    try:
        boxes = tuple(
            ScoredBox(_box(_field(b, "box", where), where),
                      float(_field(b, "score", where)), frame)
            for b in _field(record, "boxes", where)
        )
        dets = FrameDetections(frame, boxes)
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err
    return str(_field(record, "video_id", where)), dets


# --- proposals -------------------------------------------------------------------

def proposal_record(video_id: str, p: ClassifiedProposal) -> dict:
    return {
        "schema": schema_tag("proposals"),
        "video_id": video_id,
        "segment": [p.segment.start, p.segment.end],
        "class_id": p.class_id,
        "cls_score": p.cls_score,
    }


def parse_proposal(record: dict, where: str) -> tuple[str, ClassifiedProposal]:
    check_schema(record, "proposals", where)
    try:
        proposal = ClassifiedProposal(
            segment=_segment(_field(record, "segment", where), where),
            class_id=int(_field(record, "class_id", where)),
            cls_score=float(_field(record, "cls_score", where)),
        )
    except ValueError as err:
        raise InputError(f"{where}: {err}") from err
    return str(_field(record, "video_id", where)), proposal
