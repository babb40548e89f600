"""Descriptor matching and repeatability evaluation.

Brute-force nearest-neighbour matching under the distance-ratio test, region
overlap error under a homography, greedy one-to-one ground truth, and the
recall / 1-precision sweep.
"""

from dataclasses import dataclass
import math
from typing import List, NamedTuple, Sequence

import numpy as np

from .backend import kernels

RADIUS_FACTOR = 3.0  # region radius = factor * scale, mirrors the patch extent
OVERLAP_SAMPLES = 400
MAX_OVERLAP_ERROR = 0.5
RATIO_STEP = 0.05


@dataclass
class MatchPair:
    index_a: int
    index_b: int
    distance_ratio: float
    distance: float


class CurvePoint(NamedTuple):
    threshold: float
    recall: float
    one_minus_precision: float
    num_correct: int
    num_false: int


@dataclass
class EvaluationCurve:
    samples: List[CurvePoint]

    def area_under_curve(self):
        """Trapezoidal recall-vs-(1-precision) integral over the sampled points."""
        pts = sorted((s.one_minus_precision, s.recall) for s in self.samples)
        if len(pts) < 2:
            return 0.0
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        return float(np.trapezoid(y, x))


def default_ratio_thresholds():
    """0.05 to 1.0 in steps of 0.05."""
    return [round(RATIO_STEP * i, 10) for i in range(1, 21)]


def _descriptor_matrix(descs):
    n = len(descs)
    vals = np.empty((n, descs[0].values.shape[0] if n else 0), dtype=np.float64)
    alive = np.empty(n, dtype=bool)
    for i, d in enumerate(descs):
        vals[i] = d.values
        alive[i] = not d.degenerate
    return vals, alive


def nearest_neighbor_pairs(descs_a, descs_b):
    """Nearest-neighbour pair with its distance ratio for every usable query.

    Degenerate descriptors never participate on either side.  Requires at
    least two non-degenerate references so the ratio is defined.  Distance
    ties resolve to the lower reference index.  A zero second-nearest
    distance (exact duplicates) yields ratio 1.0: the match is ambiguous.
    """
    vb, alive_b = _descriptor_matrix(descs_b)
    ref_idx = np.flatnonzero(alive_b)
    if ref_idx.size < 2:
        raise ValueError("need at least two non-degenerate reference descriptors")
    va, alive_a = _descriptor_matrix(descs_a)
    q_idx = np.flatnonzero(alive_a)
    if q_idx.size == 0:
        return []
    idx, dist = kernels.top2_neighbors(
        np.ascontiguousarray(va[q_idx]), np.ascontiguousarray(vb[ref_idx])
    )
    pairs = []
    for qi, jj, dd in zip(q_idx, idx, dist):
        d1, d2 = float(dd[0]), float(dd[1])
        ratio = d1 / d2 if d2 > 0.0 else 1.0
        pairs.append(MatchPair(int(qi), int(ref_idx[jj[0]]), ratio, d1))
    return pairs


def match_ratio(descs_a, descs_b, ratio_threshold):
    """Pairs whose nearest-neighbour distance ratio is strictly below the threshold."""
    if not (0.0 < ratio_threshold <= 1.0):
        raise ValueError(f"ratio threshold must be in (0, 1], got {ratio_threshold}")
    return [
        p
        for p in nearest_neighbor_pairs(descs_a, descs_b)
        if p.distance_ratio < ratio_threshold
    ]


def check_homography(h):
    m = np.asarray(h, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"homography must be 3x3, got {m.shape}")
    if abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("homography is singular")
    return m


def apply_homography(h, pts):
    """Map (N, 2) points; raises if any point lands behind the plane (w <= 0)."""
    p = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    hom = p @ h[:, :2].T + h[:, 2]
    w = hom[:, 2]
    if np.any(w <= 0.0):
        raise ValueError("homography maps a point behind the plane (w <= 0)")
    return hom[:, :2] / w[:, None]


def _region_membership(xs, ys, cx, cy, radius):
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius


def overlap_error(kp_a, kp_b, h, radius_factor=RADIUS_FACTOR, samples=OVERLAP_SAMPLES):
    """1 - intersection/union of the two keypoint regions in image-b frame.

    Regions are disks of radius radius_factor * scale; keypoint a's disk is
    mapped through the homography, keypoint b's lives in its own frame.
    Membership is counted on a square-cell grid covering the union's bounding
    box, at least 200 cells along the longer side.
    """
    hm = check_homography(h)
    samples = max(200, int(samples))
    ra = radius_factor * kp_a.scale
    rb = radius_factor * kp_b.scale

    ang = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    ring = np.column_stack(
        (kp_a.x + ra * np.cos(ang), kp_a.y + ra * np.sin(ang))
    )
    mapped = apply_homography(hm, np.vstack((ring, [[kp_a.x, kp_a.y]])))
    x_lo = min(mapped[:, 0].min(), kp_b.x - rb)
    x_hi = max(mapped[:, 0].max(), kp_b.x + rb)
    y_lo = min(mapped[:, 1].min(), kp_b.y - rb)
    y_hi = max(mapped[:, 1].max(), kp_b.y + rb)

    step = max(x_hi - x_lo, y_hi - y_lo) / samples
    nx = max(1, int(math.ceil((x_hi - x_lo) / step)))
    ny = max(1, int(math.ceil((y_hi - y_lo) / step)))
    xs = x_lo + (np.arange(nx) + 0.5) * step
    ys = y_lo + (np.arange(ny) + 0.5) * step
    gx, gy = np.meshgrid(xs, ys)

    in_b = _region_membership(gx, gy, kp_b.x, kp_b.y, rb)

    hinv = np.linalg.inv(hm)
    flat = np.column_stack((gx.ravel(), gy.ravel()))
    hom = flat @ hinv[:, :2].T + hinv[:, 2]
    w = hom[:, 2]
    back = np.full_like(flat, np.inf)
    ok = w > 0.0
    back[ok] = hom[ok, :2] / w[ok, None]
    in_a = (
        ((back[:, 0] - kp_a.x) ** 2 + (back[:, 1] - kp_a.y) ** 2) <= ra * ra
    ).reshape(gy.shape)

    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 1.0
    inter = np.count_nonzero(in_a & in_b)
    return 1.0 - inter / union


def overlap_error_matrix(
    kps_a,
    kps_b,
    h,
    radius_factor=RADIUS_FACTOR,
    samples=OVERLAP_SAMPLES,
    prefilter=True,
):
    """All-pairs overlap errors, with far-apart pairs short-circuited to 1.0.

    The prefilter maps each a-region's centre and boundary probes through the
    homography and skips pairs whose bounding circles cannot intersect; it is
    conservative for the mildly-distorting homographies ground truth is used
    with (similarities, rotations, gentle projective maps).
    """
    hm = check_homography(h)
    errors = np.ones((len(kps_a), len(kps_b)))
    if len(kps_a) == 0 or len(kps_b) == 0:
        return errors
    if prefilter:
        ang = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        ca, sa = np.cos(ang), np.sin(ang)
        centers = np.empty((len(kps_a), 2))
        bound = np.empty(len(kps_a))
        for i, kp in enumerate(kps_a):
            ra = radius_factor * kp.scale
            pts = np.column_stack((kp.x + ra * ca, kp.y + ra * sa))
            mapped = apply_homography(hm, np.vstack((pts, [[kp.x, kp.y]])))
            centers[i] = mapped[-1]
            bound[i] = np.hypot(*(mapped[:-1] - mapped[-1]).T).max()
        bx = np.array([kp.x for kp in kps_b])
        by = np.array([kp.y for kp in kps_b])
        rb = radius_factor * np.array([kp.scale for kp in kps_b])
        dist = np.hypot(centers[:, 0:1] - bx[None, :], centers[:, 1:2] - by[None, :])
        candidates = dist <= bound[:, None] * 1.1 + rb[None, :] + 2.0
    else:
        candidates = np.ones(errors.shape, dtype=bool)
    for i, j in np.argwhere(candidates):
        errors[i, j] = overlap_error(kps_a[i], kps_b[j], hm, radius_factor, samples)
    return errors


def greedy_one_to_one(errors, max_error=MAX_OVERLAP_ERROR):
    """One-to-one pairs chosen greedily by ascending error below max_error.

    Ties resolve by (row, column) order.  Returns [(index_a, index_b), ...]
    in selection order.
    """
    e = np.asarray(errors, dtype=np.float64)
    flat = e.ravel()
    cand = np.flatnonzero(flat < max_error)
    order = cand[np.argsort(flat[cand], kind="stable")]
    ncols = e.shape[1]
    used_a = set()
    used_b = set()
    pairs = []
    for f in order:
        i, j = divmod(int(f), ncols)
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
    return pairs


def ground_truth(
    kps_a,
    kps_b,
    h,
    max_error=MAX_OVERLAP_ERROR,
    radius_factor=RADIUS_FACTOR,
    samples=OVERLAP_SAMPLES,
):
    """Geometric correspondences: greedy one-to-one pairs with overlap error < max_error."""
    errors = overlap_error_matrix(kps_a, kps_b, h, radius_factor, samples)
    return greedy_one_to_one(errors, max_error)


def pr_curve(pairs, correspondences, thresholds=None):
    """Recall / 1-precision sweep of the ratio threshold.

    pairs: nearest-neighbour pairs with ratios (see nearest_neighbor_pairs);
    correspondences: the ground-truth index pairs, must be non-empty.  At
    each threshold, recall = correct / len(correspondences) and
    1-precision = false / all-matches (0 when nothing matches).
    """
    corr = {(int(i), int(j)) for i, j in correspondences}
    if not corr:
        raise ValueError("ground truth is empty: recall is undefined")
    if thresholds is None:
        thresholds = default_ratio_thresholds()
    pts = []
    for t in thresholds:
        sel = [p for p in pairs if p.distance_ratio < t]
        ncorrect = sum((p.index_a, p.index_b) in corr for p in sel)
        nfalse = len(sel) - ncorrect
        recall = ncorrect / len(corr)
        omp = nfalse / len(sel) if sel else 0.0
        pts.append(CurvePoint(float(t), recall, omp, ncorrect, nfalse))
    return EvaluationCurve(pts)


def average_precision(ranked: Sequence[bool]):
    """Mean of precision-at-k over the relevant ranks of a ranked list."""
    hits = 0
    total = 0.0
    for k, rel in enumerate(ranked, 1):
        if rel:
            hits += 1
            total += hits / k
    if hits == 0:
        raise ValueError("ranked list has no relevant items")
    return total / hits
