"""trajlab: segment-level annotation toolkit for per-second car trajectories."""

from .model import (
    AnnotationLayer,
    AnnotationMark,
    AnnotationType,
    SegmentType,
    Trajectory,
    TrajectoryPoint,
    ValidationError,
    compute_heading_changes,
    signed_heading_delta,
    validate_segmentation,
)
from .dact import (
    DACT_COLUMNS,
    DactFormatError,
    ValidationReport,
    parse_dact,
    validate_quality,
    write_dact,
    write_dact_corpus,
)
from .autoann import AUTOANN_AUTHOR, AutoAnnConfig, AutoAnnResult, run_autoann
from .aggregation import (
    EASY_PROFILE,
    STRICT_PROFILE,
    CandidateSegment,
    MergeAction,
    MergeDecision,
    MergeError,
    ThresholdProfile,
    detect_candidates,
    detect_heading_candidates,
    detect_speed_candidates,
    merge_layers,
)
from .agreement import (
    EARTH_RADIUS_M,
    AgreementConfig,
    AgreementDataset,
    AgreementError,
    ContingencyCounts,
    cohens_kappa,
    haversine,
    match_annotations,
    overlap,
    phase_agreement,
    tau_sweep,
)
from .store import AnnotationStore, Assignment, assign_trajectories

__version__ = "0.1.0"
