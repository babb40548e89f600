"""Raster operations: stencils and patch extraction.

Images are 2D float64 arrays indexed [y, x] with x along columns.  Vector
fields are (H, W, 2) arrays carrying (x, y) components in the last axis.
All stencils use replicate-border extension.
"""

from dataclasses import dataclass
import math

import numpy as np

from .backend import kernels

PATCH_SIDE = 31
PATCH_MAGNIFICATION = 3.0


def as_image(image, min_side=3):
    """Validate and convert to a contiguous float64 2D array."""
    img = np.ascontiguousarray(np.asarray(image, dtype=np.float64))
    if img.ndim != 2:
        raise ValueError(f"image must be 2D, got shape {img.shape}")
    if min(img.shape) < min_side:
        raise ValueError(f"image must be at least {min_side}x{min_side}, got {img.shape}")
    return img


def _as_field(field):
    f = np.ascontiguousarray(np.asarray(field, dtype=np.float64))
    if f.ndim != 3 or f.shape[2] != 2:
        raise ValueError(f"vector field must have shape (H, W, 2), got {f.shape}")
    if min(f.shape[:2]) < 3:
        raise ValueError("vector field must be at least 3x3")
    return f


def gradient(image):
    """Central-difference gradient of an image, (H, W, 2)."""
    return kernels.gradient(as_image(image))


def laplacian(image):
    """Discrete 4-neighbour Laplacian: neighbours summed minus 4x centre.

    Positive over dark blobs, negative over bright ones.
    """
    return kernels.laplacian(as_image(image))


def laplace_of_field(field):
    """Laplace residual of a vector field: v minus the mean of its 4 neighbours.

    Applied to an image gradient this yields the band-passed "Laplace
    gradient" the descriptor accumulates.  Equals -1/4 of the component-wise
    `laplacian`.
    """
    return kernels.laplace_of_field(_as_field(field))


@dataclass
class Patch:
    """Square patch resampled around a keypoint."""

    pixels: np.ndarray
    keypoint: object = None

    @property
    def side(self):
        return self.pixels.shape[0]


def extract_patch(image, keypoint, side=PATCH_SIDE, magnification=3.0):
    """Resample an oriented square patch centred on a keypoint.

    The grid spans +-magnification * keypoint.scale in image pixels, rotated
    by keypoint.orientation, sampled bilinearly with replicate borders.  With
    an integer centre, zero orientation and magnification * scale equal to
    (side - 1) / 2 the patch is an exact pixel crop.
    """
    img = as_image(image)
    side = int(side)
    if side < 3 or side % 2 == 0:
        raise ValueError(f"patch side must be odd and >= 3, got {side}")
    if magnification <= 0:
        raise ValueError("magnification must be positive")
    for name in ("x", "y", "scale", "orientation"):
        v = getattr(keypoint, name)
        if not math.isfinite(v):
            raise ValueError(f"keypoint.{name} is not finite: {v!r}")
    if keypoint.scale <= 0:
        raise ValueError("keypoint.scale must be positive")
    c = (side - 1) / 2.0
    spacing = magnification * keypoint.scale / c
    pix = kernels.bilinear_patch(
        img,
        float(keypoint.x),
        float(keypoint.y),
        math.cos(keypoint.orientation),
        math.sin(keypoint.orientation),
        spacing,
        side,
    )
    return Patch(pix, keypoint)
