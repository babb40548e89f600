"""Contrast-invertible local feature descriptor (DCI) toolkit.

Laplace-gradient orientation histograms with a divergence-driven polarity
flip make the descriptor invariant to affine contrast changes and to full
contrast inversion; a gradient-histogram baseline, a multi-scale blob
detector, a ratio-test matcher and the recall / 1-precision evaluation
protocol round out the pipeline.  The per-pixel kernels run from a compiled
extension when available and from NumPy otherwise (see dci.backend).
"""

from .backend import COMPILED, backend_name
from .descriptor import (
    DEGENERATE_EPS,
    DESCRIPTOR_SIZE,
    Descriptor,
    FlipMode,
    build_holg,
    canonical_flip,
    describe,
    describe_hog_baseline,
    divergence_phi,
    divergence_phi_flux,
    finalize,
    mean_histograms,
)
from .detector import (
    Keypoint,
    detect_log,
    dominant_orientation,
    dominant_orientation_from_gradient,
    gaussian_blur,
)
from .fileio import (
    load_descriptors,
    load_homography,
    load_image,
    load_keypoints,
    save_descriptors,
    save_homography,
    save_keypoints,
    save_pgm,
)
from .matching import (
    CurvePoint,
    EvaluationCurve,
    MatchPair,
    average_precision,
    default_ratio_thresholds,
    greedy_one_to_one,
    ground_truth,
    match_ratio,
    nearest_neighbor_pairs,
    overlap_error,
    overlap_error_matrix,
    pr_curve,
)
from .ops import (
    PATCH_MAGNIFICATION,
    PATCH_SIDE,
    Patch,
    extract_patch,
    gradient,
    laplace_of_field,
    laplacian,
)

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "CurvePoint",
    "DEGENERATE_EPS",
    "DESCRIPTOR_SIZE",
    "Descriptor",
    "EvaluationCurve",
    "FlipMode",
    "Keypoint",
    "MatchPair",
    "PATCH_MAGNIFICATION",
    "PATCH_SIDE",
    "Patch",
    "average_precision",
    "backend_name",
    "build_holg",
    "canonical_flip",
    "default_ratio_thresholds",
    "describe",
    "describe_hog_baseline",
    "detect_log",
    "divergence_phi",
    "divergence_phi_flux",
    "dominant_orientation",
    "dominant_orientation_from_gradient",
    "extract_patch",
    "finalize",
    "gaussian_blur",
    "gradient",
    "greedy_one_to_one",
    "ground_truth",
    "laplace_of_field",
    "laplacian",
    "load_descriptors",
    "load_homography",
    "load_image",
    "load_keypoints",
    "match_ratio",
    "mean_histograms",
    "nearest_neighbor_pairs",
    "overlap_error",
    "overlap_error_matrix",
    "pr_curve",
    "save_descriptors",
    "save_homography",
    "save_keypoints",
    "save_pgm",
    "__version__",
]
