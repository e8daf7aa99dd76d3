"""Region-based spatiotemporal motion saliency and saliency-guided grouping
of regions into proto-objects."""

__version__ = "0.1.0"

from .evaluation import GroundTruth, RocPoint, SelectionMetrics, selection_metrics, threshold_sweep
from .grouping import GroupingParams, MotionSignature, ObjectSelection, grow_object, select_objects
from .motion_feature import RegionAngle, spatiotemporal_angle
from .pipeline import PipelineConfig, RunReport, run_pipeline
from .saliency import FrameSaliency, SaliencyParams, motion_saliency, project_to_frame, select_foa
from .segmentation import LabelMap, Region, Segmentation, SegmentationParams, segment_slice
from .synth import SceneSpec, expected_angle, generate_scene
from .volume import Frame, FrameVolume, SliceStack, build_volume, extract_slices, load_frames
