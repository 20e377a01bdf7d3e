"""Command-line surface tying the pipeline together.

Subcommands: build-dataset, link, eval, stats, gen-synth. All artifacts are
line-delimited JSON (see formats.py); every command is deterministic given
its inputs, config, and seed, including with TUBEKIT_THREADS > 1. Exit codes:
0 success, 1 input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataset as ds
from . import formats as fmt
from . import metrics
from .config import (Config, DatasetConfig, EvalConfig, InferenceConfig,
                     config_to_dict, load_config, override)
from .formats import InputError
from .linking import build_detections
from .suppression import ScoredSegment
from .synth import ScenarioSpec, SynthCorpus, generate_corpus

THREADS_ENV = "TUBEKIT_THREADS"


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _load_base_config(args) -> Config:
    return load_config(args.config) if args.config else Config()


def _write_csv(path: Path, rows: list[tuple]) -> None:
    fd_rows = [("metric", "class", "alpha", "value"), *rows]
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(fd_rows)
    os.replace(tmp, path)


# --- build-dataset ------------------------------------------------------------

def _cmd_build_dataset(args) -> None:
    cfg = _load_base_config(args).dataset
    cfg = override(
        cfg,
        videos_per_class=args.videos_per_class,
        seed=args.seed,
        temporal_range=tuple(args.temporal_range) if args.temporal_range else None,
        spatial_range=tuple(args.spatial_range) if args.spatial_range else None,
        bin_width=args.bin_width,
    )
    annotations = [fmt.parse_object_annotation(rec, where)
                   for where, rec in fmt.read_jsonl(args.annotations)]
    videos: dict[str, tuple] = {}
    for where, rec in fmt.read_jsonl(args.videos):
        meta, label = fmt.parse_video(rec, where)
        videos[meta.video_id] = (meta, label)

    build = ds.build_catalog(
        annotations, videos,
        t_range=cfg.temporal_range, s_range=cfg.spatial_range,
        videos_per_class=cfg.videos_per_class, seed=cfg.seed,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt.write_jsonl(out / "catalog.jsonl",
                    (fmt.catalog_record(e) for e in build.entries))
    stats = ds.dataset_stats(build.entries, cfg.bin_width)
    _write_histograms(out / "histograms.csv", stats)
    manifest = {
        "schema": fmt.schema_tag("manifest"),
        "command": "build-dataset",
        "inputs": {"annotations": str(args.annotations), "videos": str(args.videos)},
        "config": dataclasses.asdict(cfg),
        "sampler": ds.SAMPLER_NAME,
        "counts": {
            "input_videos": len(videos),
            "annotated_videos": len({a.video_id for a in annotations}),
            "kept_videos": len(build.entries),
            "classes": len(build.classes),
        },
        "classes": list(build.classes),
        "mean_temporal_ratio": stats.mean_temporal_ratio,
        "mean_spatial_ratio": stats.mean_spatial_ratio,
        "dropped": [{"video_id": d.video_id, "reason": d.reason}
                    for d in build.dropped],
    }
    fmt.write_json(out / "manifest.json", manifest)


def _write_histograms(path: Path, stats: ds.DatasetStats) -> None:
    rows = []
    for i, edge in enumerate(stats.bin_edges):
        upper = edge + stats.bin_width
        rows.append((f"{edge:.6g}", f"{upper:.6g}",
                     stats.temporal_hist[i], stats.spatial_hist[i]))
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("bin_start", "bin_end", "temporal_count", "spatial_count"))
        writer.writerows(rows)
    os.replace(tmp, path)


# --- stats ----------------------------------------------------------------------

def _cmd_stats(args) -> None:
    cfg = _load_base_config(args).dataset
    cfg = override(cfg, bin_width=args.bin_width)
    entries = [fmt.parse_catalog_entry(rec, where)
               for where, rec in fmt.read_jsonl(args.catalog)]
    stats = ds.dataset_stats(entries, cfg.bin_width)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_histograms(out / "histograms.csv", stats)
    fmt.write_json(out / "summary.json", {
        "schema": fmt.schema_tag("report"),
        "bin_width": stats.bin_width,
        "num_classes": stats.num_classes,
        "num_videos": stats.num_videos,
        "mean_temporal_ratio": stats.mean_temporal_ratio,
        "mean_spatial_ratio": stats.mean_spatial_ratio,
    })


# --- link -----------------------------------------------------------------------

def _cmd_link(args) -> None:
    cfg = _load_base_config(args).inference
    cfg = override(
        cfg,
        temporal_top_k=args.temporal_top_k,
        spatial_top_k=args.spatial_top_k,
        temporal_nms=args.temporal_nms,
        spatial_nms=args.spatial_nms,
        empty_frame=args.empty_frame,
        suppress=False if args.no_suppress else None,
    )
    proposals: dict[str, list] = {}
    for where, rec in fmt.read_jsonl(args.proposals):
        vid, proposal = fmt.parse_proposal(rec, where)
        proposals.setdefault(vid, []).append(proposal)
    frames: dict[str, dict[int, object]] = {}
    for where, rec in fmt.read_jsonl(args.frame_dets):
        vid, dets = fmt.parse_frame_detections(rec, where)
        frames.setdefault(vid, {})[dets.frame] = dets
    unknown = sorted(set(proposals) - set(frames))
    if unknown:
        raise InputError("proposals reference videos absent from the frame "
                         "detections: " + ", ".join(unknown))

    def link_one(vid: str):
        return build_detections(
            proposals[vid], frames[vid],
            suppress=cfg.suppress,
            temporal_top_k=cfg.temporal_top_k, spatial_top_k=cfg.spatial_top_k,
            temporal_nms=cfg.temporal_nms, spatial_nms=cfg.spatial_nms,
            empty_frame=cfg.empty_frame,
        )

    vids = sorted(proposals)
    threads = _threads()
    if threads > 1 and len(vids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(vids, pool.map(link_one, vids)))
    else:
        results = {vid: link_one(vid) for vid in vids}

    out = Path(args.out)
    records = []
    rejections = []
    tubes_out = 0
    for vid in vids:
        tubes, rejected = results[vid]
        tubes_out += len(tubes)
        records.extend(fmt.tube_record(vid, t) for t in tubes)
        rejections.extend({
            "video_id": vid,
            "class_id": r.proposal.class_id,
            "segment": [r.proposal.segment.start, r.proposal.segment.end],
            "reason": r.reason,
        } for r in rejected)
    fmt.write_jsonl(out, records)
    manifest = {
        "schema": fmt.schema_tag("manifest"),
        "command": "link",
        "inputs": {"proposals": str(args.proposals),
                   "frame_detections": str(args.frame_dets)},
        "config": dataclasses.asdict(cfg),
        "counts": {
            "videos": len(vids),
            "proposals_in": sum(len(p) for p in proposals.values()),
            "tubes_out": tubes_out,
            "rejections": len(rejections),
        },
        "rejections": rejections,
    }
    fmt.write_json(out.with_name(out.name + ".manifest.json"), manifest)


# --- eval -----------------------------------------------------------------------

def _read_ground_truth(path) -> dict:
    gts = {}
    for where, rec in fmt.read_jsonl(path):
        annotation = fmt.parse_video_annotation(rec, where)
        gts[annotation.meta.video_id] = annotation
    return gts


def _read_detections(path) -> dict:
    dets: dict[str, list] = {}
    for where, rec in fmt.read_jsonl(path):
        vid, tube = fmt.parse_tube(rec, where)
        dets.setdefault(vid, []).append(tube)
    return dets


def _report_json(args, payload: dict) -> None:
    payload = {"schema": fmt.schema_tag("report"), **payload}
    fmt.write_json(Path(args.out), payload)


def _per_class_rows(name: str, report: metrics.EvalReport) -> list[tuple]:
    rows = [(name, str(cid), repr(report.alpha), repr(ap))
            for cid, ap in sorted(report.per_class_ap.items())]
    rows.append((name, "mean", repr(report.alpha), repr(report.mean_ap)))
    return rows


def _report_dict(report: metrics.EvalReport) -> dict:
    return {
        "alpha": report.alpha,
        "mean_ap": report.mean_ap,
        "per_class": {str(c): ap for c, ap in sorted(report.per_class_ap.items())},
        "per_video": {
            vid: {"detections": d.num_detections, "gt": d.num_gt}
            for vid, d in sorted(report.per_video.items())
        },
    }


def _cmd_eval(args) -> None:
    cfg = _load_base_config(args).eval
    cfg = override(cfg, ap_mode=args.ap_mode)
    if args.alpha:
        cfg = override(cfg, video_alphas=tuple(args.alpha),
                       frame_alpha=args.alpha[0],
                       temporal_alphas=tuple(args.alpha))
    gts = _read_ground_truth(args.ground_truth)
    threads = _threads()
    rows: list[tuple] = []

    if args.metric == "ar":
        proposals = _read_proposal_segments(args.detections)
        report = metrics.average_recall(proposals, gts)
        _report_json(args, {
            "metric": "ar",
            "average_recall": report.average_recall,
            "thresholds": list(report.thresholds),
            "recall_per_threshold": list(report.recall_per_threshold),
            "curve": [{"proposals": n, "ar": ar} for n, ar in report.curve],
        })
        lo, hi = report.thresholds[0], report.thresholds[-1]
        rows.append(("AR", "all", f"{lo}:{hi}", repr(report.average_recall)))
        rows.extend(("AR@AN", "all", str(n), repr(ar)) for n, ar in report.curve)
        _write_csv(Path(args.csv), rows)
        return

    dets = _read_detections(args.detections)
    dets, dropped = metrics.drop_unknown_classes(dets, gts)
    if dropped:
        print("tubekit: warning: detections of classes absent from the ground "
              "truth were ignored: " + ", ".join(map(str, sorted(dropped))),
              file=sys.stderr)

    if args.metric == "video":
        reports = [metrics.video_map(dets, gts, a, cfg.ap_mode, threads)
                   for a in cfg.video_alphas]
        _report_json(args, {"metric": "video", "ap_mode": cfg.ap_mode,
                            "results": [_report_dict(r) for r in reports]})
        for r in reports:
            rows.extend(_per_class_rows("video_mAP", r))
    elif args.metric == "frame":
        report = metrics.frame_map(dets, gts, cfg.frame_alpha, cfg.ap_mode,
                                   threads, cfg.per_video_frame_map)
        _report_json(args, {"metric": "frame", "ap_mode": cfg.ap_mode,
                            "results": [_report_dict(report)]})
        rows.extend(_per_class_rows("frame_mAP", report))
    elif args.metric == "temporal":
        reports, average = metrics.temporal_map(dets, gts, cfg.temporal_alphas,
                                                cfg.ap_mode, threads)
        _report_json(args, {
            "metric": "temporal", "ap_mode": cfg.ap_mode,
            "average_map": average,
            "results": [_report_dict(r) for r in reports],
        })
        by_alpha = {r.alpha: r.mean_ap for r in reports}
        rows.extend(("temporal_mAP", "mean", repr(r.alpha), repr(r.mean_ap))
                    for r in reports)
        for highlight in (0.5, 0.7):
            if highlight in by_alpha:
                rows.append((f"temporal_mAP@{highlight}", "mean",
                             repr(highlight), repr(by_alpha[highlight])))
    else:  # unreachable: argparse restricts choices
        raise AssertionError(args.metric)
    _write_csv(Path(args.csv), rows)


def _read_proposal_segments(path) -> dict[str, list[ScoredSegment]]:
    """Class-agnostic segments from either a proposals or a tubes file."""
    out: dict[str, list[ScoredSegment]] = {}
    for where, rec in fmt.read_jsonl(path):
        tag = str(rec.get("schema", ""))
        if tag.startswith("proposals/"):
            vid, p = fmt.parse_proposal(rec, where)
            out.setdefault(vid, []).append(ScoredSegment(p.segment, p.cls_score))
        else:
            vid, tube = fmt.parse_tube(rec, where)
            out.setdefault(vid, []).append(ScoredSegment(tube.segment, tube.score))
    return out


# --- gen-synth --------------------------------------------------------------------

def _load_scenario(path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            record = json.load(fh)
        except json.JSONDecodeError as err:
            raise InputError(f"{path}: invalid JSON: {err.msg}") from err
    if not isinstance(record, dict):
        raise InputError(f"{path}: expected a JSON object")
    fmt.check_schema(record, "scenario", str(path))
    fields = {f.name for f in dataclasses.fields(ScenarioSpec)}
    extra = set(record) - fields - {"schema"}
    if extra:
        raise InputError(f"{path}: unknown scenario fields: "
                         + ", ".join(sorted(extra)))
    kwargs = {k: v for k, v in record.items() if k != "schema"}
    try:
        return ScenarioSpec(**kwargs)
    except ValueError as err:
        raise InputError(f"{path}: {err}") from err


def write_corpus(corpus: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write the four corpus artifacts; returns their paths by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "gt": out / "gt.jsonl",
        "dets": out / "dets.jsonl",
        "frame_dets": out / "frame_dets.jsonl",
        "proposals": out / "proposals.jsonl",
    }
    fmt.write_jsonl(paths["gt"], (fmt.video_annotation_record(corpus.gts[v])
                                  for v in sorted(corpus.gts)))
    fmt.write_jsonl(paths["dets"], (fmt.tube_record(v, t)
                                    for v in sorted(corpus.dets)
                                    for t in corpus.dets[v]))
    fmt.write_jsonl(paths["frame_dets"],
                    (fmt.frame_detections_record(v, corpus.frame_dets[v][f])
                     for v in sorted(corpus.frame_dets)
                     for f in sorted(corpus.frame_dets[v])))
    fmt.write_jsonl(paths["proposals"], (fmt.proposal_record(v, p)
                                         for v in sorted(corpus.proposals)
                                         for p in corpus.proposals[v]))
    return paths


def _cmd_gen_synth(args) -> None:
    spec = _load_scenario(args.scenario)
    write_corpus(generate_corpus(spec), args.out_dir)


# --- parser ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # Usage problems are input errors (exit 1), not internal failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tubekit",
                     description="Action tubes: dataset building, linking, "
                                 "and spatio-temporal evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags take precedence)")

    p = sub.add_parser("build-dataset",
                       help="synthesize, filter, and balance a dataset catalog")
    common(p)
    p.add_argument("annotations", help="object annotations JSONL")
    p.add_argument("videos", help="video metadata JSONL")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--videos-per-class", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--temporal-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--spatial-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--bin-width", type=float)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("stats", help="histograms and summary for a catalog")
    common(p)
    p.add_argument("catalog", help="catalog JSONL")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--bin-width", type=float)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("link", help="assemble action tubes from proposals "
                                    "and per-frame boxes")
    common(p)
    p.add_argument("proposals", help="classified proposals JSONL")
    p.add_argument("frame_dets", help="frame detections JSONL")
    p.add_argument("--out", required=True, help="output tubes JSONL")
    p.add_argument("--temporal-top-k", type=int)
    p.add_argument("--spatial-top-k", type=int)
    p.add_argument("--temporal-nms", type=float)
    p.add_argument("--spatial-nms", type=float)
    p.add_argument("--empty-frame", choices=("carry", "interpolate"))
    p.add_argument("--no-suppress", action="store_true",
                   help="inputs are already suppressed; skip NMS and budgets")
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    common(p)
    p.add_argument("detections", help="tubes JSONL (or proposals JSONL for --metric ar)")
    p.add_argument("ground_truth", help="video annotations JSONL")
    p.add_argument("--metric", choices=("video", "frame", "temporal", "ar"),
                   default="video")
    p.add_argument("--alpha", type=float, action="append",
                   help="IoU threshold(s); repeatable")
    p.add_argument("--ap-mode", choices=("all_point", "eleven_point"))
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", default="report.csv")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p.add_argument("scenario", help="scenario spec JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_gen_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except SystemExit as err:
        code = err.code
        return code if isinstance(code, int) else 1
    except (InputError, metrics.EvalError, ds.SynthesisError, OSError,
            ValueError) as err:
        print(f"tubekit: error: {err}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def run() -> None:
    sys.exit(main())
