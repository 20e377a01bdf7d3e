"""tubekit: action-tube construction, spatio-temporal detection metrics, and
dataset curation for video action detection."""

from .geometry import (Box, Segment, Tube, VideoAnnotation, VideoMeta,
                       box_area, box_iou, segment_iou, tube_st_iou, union_box)
from .suppression import ScoredBox, ScoredSegment, nms_boxes, nms_segments, top_k
from .anchors import (BoxDelta, SegmentDelta, SpatialAnchorGrid, TemporalAnchorSet,
                      assign_anchor_labels, decode_box, decode_segment, encode_box,
                      encode_segment, gen_spatial_anchors, gen_temporal_anchors,
                      map_gt_to_featuremaps)
from .linking import (ClassifiedProposal, FrameDetections, LinkError, LinkRejection,
                      build_detections, link_tube, score_tube)
from .metrics import (EvalReport, MatchResult, MetricDetection, MetricTarget,
                      RecallReport, average_precision, average_recall, frame_map,
                      match_greedy, temporal_map, video_map)
from .dataset import (FrameObjectAnnotation, GroundTruthTube, VideoCatalogEntry,
                      balance_classes, build_catalog, compute_ratios,
                      dataset_stats, filter_video, synthesize_tube)
from .synth import ScenarioSpec, SynthCorpus, generate_corpus
from .oracles import oracle_ap, oracle_iou_grid, oracle_tube_st_iou
from .config import Config

__version__ = "0.1.0"

__all__ = [
    "Box", "Segment", "Tube", "VideoAnnotation", "VideoMeta",
    "box_area", "box_iou", "segment_iou", "tube_st_iou", "union_box",
    "ScoredBox", "ScoredSegment", "nms_boxes", "nms_segments", "top_k",
    "BoxDelta", "SegmentDelta", "SpatialAnchorGrid", "TemporalAnchorSet",
    "assign_anchor_labels", "decode_box", "decode_segment", "encode_box",
    "encode_segment", "gen_spatial_anchors", "gen_temporal_anchors",
    "map_gt_to_featuremaps",
    "ClassifiedProposal", "FrameDetections", "LinkError", "LinkRejection",
    "build_detections", "link_tube", "score_tube",
    "EvalReport", "MatchResult", "MetricDetection", "MetricTarget",
    "RecallReport", "average_precision", "average_recall", "frame_map",
    "match_greedy", "temporal_map", "video_map",
    "FrameObjectAnnotation", "GroundTruthTube", "VideoCatalogEntry",
    "balance_classes", "build_catalog", "compute_ratios", "dataset_stats",
    "filter_video", "synthesize_tube",
    "ScenarioSpec", "SynthCorpus", "generate_corpus",
    "oracle_ap", "oracle_iou_grid", "oracle_tube_st_iou",
    "Config",
]
