"""Contrast-invertible descriptor built from Laplace-gradient histograms.

Pipeline: resample an oriented patch, take the Laplace residual of its
gradient, accumulate a 4x4 grid of 8-bin orientation histograms, then
canonicalize contrast polarity by the sign of the gradient-divergence
integral before the rooted L1 normalization.  A plain gradient-histogram
baseline (SIFT-style post-processing, no polarity step) shares the patch and
binning machinery for comparisons.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .backend import kernels
from .ops import PATCH_MAGNIFICATION, PATCH_SIDE, Patch, as_image, extract_patch

GRID_CELLS = 4
GRID_BINS = 8
DESCRIPTOR_SIZE = GRID_CELLS * GRID_CELLS * GRID_BINS
DEGENERATE_EPS = 1e-12
HOG_CLAMP = 0.2


class FlipMode(str, Enum):
    """How the polarity flip re-indexes the histogram grid.

    UPRIGHT patches keep a fixed frame, so inverting contrast rotates every
    pixel vector by pi: the flip shifts orientation bins by half a turn.
    ORIENTED patches re-align to the dominant orientation, which itself turns
    by pi under inversion; vectors keep their in-patch angles while their
    positions rotate 180 degrees, so the flip permutes cells instead.
    """

    UPRIGHT = "upright"
    ORIENTED = "oriented"


@dataclass
class Descriptor:
    values: np.ndarray
    degenerate: bool = False


def _patch_pixels(patch, min_side):
    if isinstance(patch, Patch):
        patch = patch.pixels
    p = np.ascontiguousarray(np.asarray(patch, dtype=np.float64))
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"patch must be square, got shape {p.shape}")
    if p.shape[0] < min_side:
        raise ValueError(f"patch side must be >= {min_side}, got {p.shape[0]}")
    return p


def build_holg(patch, spatial_sigma=None):
    """Histogram-of-Laplace-gradient grid of a patch, shape (4, 4, 8).

    Each pixel contributes the magnitude of the Laplace gradient, weighted by
    a centred Gaussian window (sigma defaults to side / 2), soft-binned over
    the two nearest orientation bins and up to four nearest cells.  Soft
    binning redistributes mass but never creates or destroys it.
    """
    p = _patch_pixels(patch, min_side=8)
    if spatial_sigma is None:
        spatial_sigma = p.shape[0] / 2.0
    if spatial_sigma <= 0:
        raise ValueError("spatial_sigma must be positive")
    d = kernels.laplace_of_field(kernels.gradient(p))
    return kernels.accumulate_grid(d, spatial_sigma, GRID_CELLS, GRID_BINS)


def divergence_phi(patch):
    """Net divergence of the patch gradient: Laplacian summed over the interior.

    Interior means every pixel whose 4-neighbour stencil stays inside the
    patch; with replicate borders the full-patch sum telescopes to zero, so
    the interior is where the signal lives.  Negative over bright structure
    (gradient converging on the centre), positive over dark structure.
    """
    p = _patch_pixels(patch, min_side=3)
    return float(kernels.laplacian(p)[1:-1, 1:-1].sum())


def divergence_phi_flux(patch):
    """Same quantity as `divergence_phi` via the boundary form.

    Sums the outward first differences across the interior region's border;
    the two routes agree by the discrete divergence theorem and are kept as
    independent computations so one checks the other.
    """
    p = _patch_pixels(patch, min_side=3)
    right = p[1:-1, -1] - p[1:-1, -2]
    left = p[1:-1, 0] - p[1:-1, 1]
    bottom = p[-1, 1:-1] - p[-2, 1:-1]
    top = p[0, 1:-1] - p[1, 1:-1]
    return float(right.sum() + left.sum() + bottom.sum() + top.sum())


def canonical_flip(grid, phi, mode):
    """Re-index the grid into canonical polarity when phi is negative.

    phi >= 0 returns the grid unchanged.  UPRIGHT maps bin o to (o + 4) mod 8
    within every cell; ORIENTED maps cell (r, c) to (3 - r, 3 - c) keeping
    bins.  Both are involutions and only permute values.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.shape != (GRID_CELLS, GRID_CELLS, GRID_BINS):
        raise ValueError(f"grid must have shape (4, 4, 8), got {g.shape}")
    mode = FlipMode(mode)
    if phi >= 0:
        return g.copy()
    if mode is FlipMode.UPRIGHT:
        return np.roll(g, GRID_BINS // 2, axis=2)
    return g[::-1, ::-1, :].copy()


def finalize(grid):
    """Flatten (cells row-major, bins fastest), L1-normalize, take sqrt.

    A grid with total mass below 1e-12 yields the zero descriptor flagged
    degenerate.  Negative bin mass means a broken invariant upstream and
    raises.  Non-degenerate output has unit L2 norm with values in [0, 1].
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.shape != (GRID_CELLS, GRID_CELLS, GRID_BINS):
        raise ValueError(f"grid must have shape (4, 4, 8), got {g.shape}")
    if np.any(g < 0):
        raise ValueError("histogram grid has negative mass")
    total = float(g.sum())
    if total < DEGENERATE_EPS:
        return Descriptor(np.zeros(DESCRIPTOR_SIZE), degenerate=True)
    return Descriptor(np.sqrt(g.reshape(DESCRIPTOR_SIZE) / total), degenerate=False)


def describe(
    image,
    keypoint,
    mode=FlipMode.UPRIGHT,
    side=PATCH_SIDE,
    magnification=PATCH_MAGNIFICATION,
    spatial_sigma=None,
):
    """Contrast-invertible descriptor of one keypoint, 128 values.

    UPRIGHT ignores keypoint.orientation (axis-aligned patch); ORIENTED
    aligns the patch first.  Invariant to affine contrast changes a*I + b
    with a > 0, and to contrast inversion via the polarity flip.
    """
    img = as_image(image)
    mode = FlipMode(mode)
    _check_inside(img, keypoint)
    kp = keypoint if mode is FlipMode.ORIENTED else replace(keypoint, orientation=0.0)
    patch = extract_patch(img, kp, side, magnification)
    grid = build_holg(patch.pixels, spatial_sigma)
    phi = divergence_phi(patch.pixels)
    return finalize(canonical_flip(grid, phi, mode))


def describe_hog_baseline(
    image,
    keypoint,
    side=PATCH_SIDE,
    magnification=PATCH_MAGNIFICATION,
    spatial_sigma=None,
    clamp=HOG_CLAMP,
):
    """First-order gradient-histogram baseline over the same grid.

    Uses keypoint.orientation for alignment, no polarity step; post-processed
    SIFT-style (L2 normalize, clamp, re-normalize).
    """
    img = as_image(image)
    _check_inside(img, keypoint)
    patch = extract_patch(img, keypoint, side, magnification)
    if spatial_sigma is None:
        spatial_sigma = patch.side / 2.0
    g = kernels.gradient(patch.pixels)
    grid = kernels.accumulate_grid(g, spatial_sigma, GRID_CELLS, GRID_BINS)
    flat = grid.reshape(DESCRIPTOR_SIZE)
    if flat.sum() < DEGENERATE_EPS:
        return Descriptor(np.zeros(DESCRIPTOR_SIZE), degenerate=True)
    v = flat / np.linalg.norm(flat)
    np.minimum(v, clamp, out=v)
    return Descriptor(v / np.linalg.norm(v), degenerate=False)


def mean_histograms(
    corpus: Iterable[tuple],
    side=PATCH_SIDE,
    magnification=PATCH_MAGNIFICATION,
):
    """Corpus means of whole-patch orientation histograms, (hog, holg).

    corpus yields (image, keypoints) pairs.  For every keypoint the aligned
    patch produces one 8-bin gradient histogram and one 8-bin Laplace-gradient
    histogram (magnitude weighted, no spatial window); each is L1-normalized,
    then averaged over the corpus.  Keypoints whose histogram mass is below
    the degeneracy epsilon are skipped.  Raises if nothing usable remains.
    """
    sum_hog = np.zeros(GRID_BINS)
    sum_holg = np.zeros(GRID_BINS)
    count = 0
    for image, keypoints in corpus:
        img = as_image(image)
        for kp in keypoints:
            patch = extract_patch(img, kp, side, magnification)
            g = kernels.gradient(patch.pixels)
            d = kernels.laplace_of_field(g)
            h_hog = kernels.orientation_histogram(g, GRID_BINS)
            h_holg = kernels.orientation_histogram(d, GRID_BINS)
            sh = h_hog.sum()
            sl = h_holg.sum()
            if sh < DEGENERATE_EPS or sl < DEGENERATE_EPS:
                continue
            sum_hog += h_hog / sh
            sum_holg += h_holg / sl
            count += 1
    if count == 0:
        raise ValueError("corpus has no keypoints with usable histograms")
    return sum_hog / count, sum_holg / count


def _check_inside(img, keypoint):
    h, w = img.shape
    if not (0.0 <= keypoint.x <= w - 1 and 0.0 <= keypoint.y <= h - 1):
        raise ValueError(
            f"keypoint centre ({keypoint.x}, {keypoint.y}) outside image {w}x{h}"
        )
