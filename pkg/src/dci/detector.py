"""Multi-scale blob detector and dominant-orientation estimator.

Scale-normalized Laplacian responses (sigma^2 * laplacian of the Gaussian-
smoothed image, computed directly per scale, not by difference of Gaussians)
are scanned for strict 3x3x3 extrema of |response|, then refined in-plane by
a quadratic fit.  The detector is a plain geometry carrier for descriptor
evaluation, not a tuned reproduction of any particular implementation.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .backend import kernels
from .ops import as_image

TWO_PI = 2.0 * math.pi

NUM_SCALES = 9
SIGMA_MIN = 1.6
SIGMA_STEP = 2.0 ** (1.0 / 3.0)
RESPONSE_THRESHOLD = 0.03

ORI_BINS = 36
ORI_SIGMA_FACTOR = 1.5
ORI_WINDOW_FACTOR = 3.0


@dataclass
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float = 0.0
    response: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0):
            raise ValueError(f"keypoint scale must be positive, got {self.scale}")
        o = self.orientation % TWO_PI
        if o >= TWO_PI:
            o = 0.0
        self.orientation = o


def gaussian_kernel_1d(sigma, truncate=3.0):
    """Normalized 1D Gaussian taps with radius ceil(truncate * sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = max(1, int(math.ceil(truncate * sigma)))
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(image, sigma):
    return kernels.separable_blur(as_image(image), gaussian_kernel_1d(sigma))


def detect_log(
    image,
    num_scales=NUM_SCALES,
    sigma_min=SIGMA_MIN,
    sigma_step=SIGMA_STEP,
    response_threshold=RESPONSE_THRESHOLD,
):
    """Keypoints at strict scale-space extrema of |sigma^2 Laplacian|.

    Intensities with maximum above 1 are treated as 8-bit data and divided by
    255, so the default threshold applies to a [0, 1] range either way.
    Returned keypoints carry the signed response and orientation 0, ordered
    by descending |response| with ties broken by y then x.  An image and its
    negative yield identical locations and scales.
    """
    img = as_image(image)
    if num_scales < 3:
        raise ValueError("need at least 3 scales for scale-space extrema")
    if sigma_min <= 0 or sigma_step <= 1.0:
        raise ValueError("sigma_min must be > 0 and sigma_step > 1")
    sigmas = sigma_min * sigma_step ** np.arange(num_scales)
    r_max = int(math.ceil(3.0 * sigmas[-1]))
    h, w = img.shape
    if min(h, w) < 2 * r_max + 1:
        raise ValueError(
            f"image {w}x{h} too small for largest scale sigma={sigmas[-1]:.3g}"
        )
    if img.max() > 1.0:
        img = img / 255.0

    stack = np.empty((num_scales, h, w))
    for k, s in enumerate(sigmas):
        blurred = kernels.separable_blur(img, gaussian_kernel_1d(s))
        stack[k] = (s * s) * kernels.laplacian(blurred)

    mask = kernels.extrema_mask(stack, response_threshold)
    kps = []
    for k, y, x in np.argwhere(mask):
        r = stack[k]
        gx = 0.5 * (r[y, x + 1] - r[y, x - 1])
        gy = 0.5 * (r[y + 1, x] - r[y - 1, x])
        hxx = r[y, x + 1] + r[y, x - 1] - 2.0 * r[y, x]
        hyy = r[y + 1, x] + r[y - 1, x] - 2.0 * r[y, x]
        hxy = 0.25 * (r[y + 1, x + 1] - r[y + 1, x - 1] - r[y - 1, x + 1] + r[y - 1, x - 1])
        det = hxx * hyy - hxy * hxy
        if abs(det) < 1e-12:
            ox = oy = 0.0
        else:
            ox = -(hyy * gx - hxy * gy) / det
            oy = -(hxx * gy - hxy * gx) / det
            ox = min(0.5, max(-0.5, ox))
            oy = min(0.5, max(-0.5, oy))
        resp = r[y, x] + 0.5 * (gx * ox + gy * oy)
        kps.append(Keypoint(x + ox, y + oy, float(sigmas[k]), 0.0, float(resp)))
    kps.sort(key=lambda p: (-abs(p.response), p.y, p.x))
    return kps


def dominant_orientation(
    image,
    keypoint,
    num_bins=ORI_BINS,
    sigma_factor=ORI_SIGMA_FACTOR,
    window_factor=ORI_WINDOW_FACTOR,
):
    """Peak of a Gaussian-weighted gradient-orientation histogram.

    Returns (angle, degenerate).  Hard 36-bin histogram over a square window
    of radius window_factor * sigma (sigma = sigma_factor * keypoint.scale),
    magnitude weighted; the winning bin (lowest index on ties) is refined by
    a parabola through its neighbours.  A windowful of zero gradients returns
    (0.0, True).  Invariant to a*I + b with a > 0; shifts by pi when the
    image contrast is inverted.
    """
    img = as_image(image)
    return dominant_orientation_from_gradient(
        kernels.gradient(img), keypoint, num_bins, sigma_factor, window_factor
    )


def dominant_orientation_from_gradient(
    grad_field,
    keypoint,
    num_bins=ORI_BINS,
    sigma_factor=ORI_SIGMA_FACTOR,
    window_factor=ORI_WINDOW_FACTOR,
):
    """Same as dominant_orientation but reusing a precomputed gradient field."""
    h, w = grad_field.shape[:2]
    sigma = sigma_factor * keypoint.scale
    radius = window_factor * sigma
    x0 = max(0, int(math.ceil(keypoint.x - radius)))
    x1 = min(w - 1, int(math.floor(keypoint.x + radius)))
    y0 = max(0, int(math.ceil(keypoint.y - radius)))
    y1 = min(h - 1, int(math.floor(keypoint.y + radius)))
    if x0 > x1 or y0 > y1:
        return 0.0, True
    sub = grad_field[y0 : y1 + 1, x0 : x1 + 1]
    gx = sub[..., 0]
    gy = sub[..., 1]
    xs = np.arange(x0, x1 + 1, dtype=np.float64) - keypoint.x
    ys = np.arange(y0, y1 + 1, dtype=np.float64) - keypoint.y
    wgt = np.hypot(gx, gy) * np.exp(
        -(xs[None, :] ** 2 + ys[:, None] ** 2) / (2.0 * sigma * sigma)
    )
    theta = np.arctan2(gy, gx)
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    bins = (theta * (num_bins / TWO_PI)).astype(np.int64) % num_bins
    hist = np.bincount(bins.ravel(), weights=wgt.ravel(), minlength=num_bins)
    if hist.max() <= 0.0:
        return 0.0, True
    b = int(np.argmax(hist))
    hm = hist[(b - 1) % num_bins]
    hp = hist[(b + 1) % num_bins]
    denom = hm - 2.0 * hist[b] + hp
    delta = 0.0 if abs(denom) < 1e-12 else 0.5 * (hm - hp) / denom
    delta = min(0.5, max(-0.5, delta))
    angle = ((b + 0.5 + delta) * (TWO_PI / num_bins)) % TWO_PI
    return float(angle), False
