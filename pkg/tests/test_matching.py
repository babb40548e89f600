"""Matcher, overlap geometry and evaluation curve against naive oracles."""

import math

import numpy as np
import pytest

from dci.descriptor import Descriptor
from dci.detector import Keypoint
from dci.matching import (
    EvaluationCurve,
    CurvePoint,
    apply_homography,
    average_precision,
    check_homography,
    default_ratio_thresholds,
    greedy_one_to_one,
    ground_truth,
    match_ratio,
    nearest_neighbor_pairs,
    overlap_error,
    overlap_error_matrix,
    pr_curve,
)


def _desc(vec, degenerate=False):
    return Descriptor(np.asarray(vec, dtype=np.float64), degenerate)


def _nn_oracle(descs_a, descs_b):
    """Quadratic scan with explicit tie rules, mirroring the matcher contract."""
    alive_b = [j for j, d in enumerate(descs_b) if not d.degenerate]
    out = []
    for i, da in enumerate(descs_a):
        if da.degenerate:
            continue
        best = []
        for j in alive_b:
            dist = math.dist(da.values, descs_b[j].values)
            best.append((dist, j))
        best.sort(key=lambda t: (t[0], t[1]))
        d1, j1 = best[0]
        d2 = best[1][0]
        ratio = d1 / d2 if d2 > 0 else 1.0
        out.append((i, j1, ratio, d1))
    return out


def _greedy_oracle(errors, max_error):
    e = np.asarray(errors, dtype=np.float64)
    order = sorted(
        ((e[i, j], i, j) for i in range(e.shape[0]) for j in range(e.shape[1])),
        key=lambda t: (t[0], t[1], t[2]),
    )
    used_a, used_b, pairs = set(), set(), []
    for err, i, j in order:
        if err >= max_error or i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((i, j))
    return pairs


def _circle_intersection(r1, r2, d):
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    return r1 * r1 * (a1 - math.sin(2 * a1) / 2) + r2 * r2 * (a2 - math.sin(2 * a2) / 2)


def test_match_ratio_basic():
    refs = [_desc([1, 0, 0, 0]), _desc([0, 1, 0, 0])]
    query = [_desc([0.9, 0, 0, 0])]
    pairs = match_ratio(query, refs, 0.5)
    assert len(pairs) == 1
    p = pairs[0]
    assert (p.index_a, p.index_b) == (0, 0)
    np.testing.assert_allclose(p.distance, 0.1)
    np.testing.assert_allclose(p.distance_ratio, 0.1 / math.hypot(0.9, 1.0))
    # too strict a threshold filters it out
    assert match_ratio(query, refs, 0.05) == []


def test_match_ratio_tie_and_duplicate_refs():
    refs = [_desc([1, 0]), _desc([1, 0]), _desc([0, 1])]
    pairs = nearest_neighbor_pairs([_desc([1, 0])], refs)
    assert len(pairs) == 1
    # duplicate nearest rows: lowest index wins, zero second distance
    assert pairs[0].index_b == 0
    assert pairs[0].distance_ratio == 1.0
    # ratio 1.0 is never strictly below any valid threshold
    assert match_ratio([_desc([1, 0])], refs, 1.0) == []


def test_match_ratio_degenerate_descriptors():
    refs = [
        _desc([0, 0, 0], degenerate=True),
        _desc([1, 0, 0]),
        _desc([0, 1, 0]),
    ]
    queries = [_desc([0, 0, 0], degenerate=True), _desc([0.8, 0, 0])]
    pairs = nearest_neighbor_pairs(queries, refs)
    assert len(pairs) == 1
    assert pairs[0].index_a == 1  # degenerate query dropped
    assert pairs[0].index_b == 1  # indices refer to the original list


def test_match_ratio_validation():
    refs = [_desc([1, 0]), _desc([0, 1])]
    with pytest.raises(ValueError):
        match_ratio([_desc([1, 0])], refs, 0.0)
    with pytest.raises(ValueError):
        match_ratio([_desc([1, 0])], refs, 1.5)
    with pytest.raises(ValueError):
        nearest_neighbor_pairs([_desc([1, 0])], [_desc([1, 0])])
    with pytest.raises(ValueError):
        nearest_neighbor_pairs(
            [_desc([1, 0])], [_desc([1, 0]), _desc([0, 0], degenerate=True)]
        )


def test_nearest_neighbors_match_oracle():
    rng = np.random.default_rng(50)
    for _ in range(200):
        na = int(rng.integers(1, 12))
        nb = int(rng.integers(2, 12))
        dim = int(rng.choice([3, 8]))
        descs_a = [_desc(rng.uniform(0, 1, dim)) for _ in range(na)]
        descs_b = [_desc(rng.uniform(0, 1, dim)) for _ in range(nb)]
        for d in descs_a[: na // 4]:
            d.values[:] = 0.0
            d.degenerate = True
        pairs = nearest_neighbor_pairs(descs_a, descs_b)
        oracle = _nn_oracle(descs_a, descs_b)
        assert [(p.index_a, p.index_b) for p in pairs] == [o[:2] for o in oracle]
        np.testing.assert_allclose(
            [p.distance_ratio for p in pairs], [o[2] for o in oracle], atol=1e-12
        )
        np.testing.assert_allclose(
            [p.distance for p in pairs], [o[3] for o in oracle], atol=1e-12
        )


def test_homography_helpers():
    h = np.array([[1.0, 0, 3], [0, 1, -2], [0, 0, 1]])
    np.testing.assert_allclose(apply_homography(h, [[1.0, 1.0]]), [[4.0, -1.0]])
    with pytest.raises(ValueError):
        check_homography(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        check_homography(np.eye(4))
    tilt = np.array([[1.0, 0, 0], [0, 1, 0], [-0.1, 0, 1]])
    with pytest.raises(ValueError):
        apply_homography(tilt, [[20.0, 0.0]])


def test_overlap_error_identical_regions():
    kp = Keypoint(40.0, 40.0, 2.0)
    assert overlap_error(kp, kp, np.eye(3)) == 0.0


def test_overlap_error_disjoint_regions():
    a = Keypoint(10.0, 10.0, 1.0)
    b = Keypoint(200.0, 200.0, 1.0)
    assert overlap_error(a, b, np.eye(3)) == 1.0


def test_overlap_error_concentric_double_radius():
    # area ratio of concentric disks with radii r and 2r is 1/4
    a = Keypoint(50.0, 50.0, 2.0)
    b = Keypoint(50.0, 50.0, 4.0)
    e = overlap_error(a, b, np.eye(3), samples=400)
    assert abs(e - 0.75) < 0.01


def test_overlap_error_translation_forms_agree():
    h = np.eye(3)
    h[0, 2] = 3.0
    a_direct = overlap_error(Keypoint(13.0, 10.0, 2.0), Keypoint(13.0, 10.0, 2.0), np.eye(3))
    a_mapped = overlap_error(Keypoint(10.0, 10.0, 2.0), Keypoint(13.0, 10.0, 2.0), h)
    np.testing.assert_allclose(a_mapped, a_direct, atol=1e-12)


def test_overlap_error_roughly_symmetric():
    rng = np.random.default_rng(51)
    for _ in range(20):
        s = rng.uniform(0.6, 1.6)
        ang = rng.uniform(0, 2 * math.pi)
        h = np.array(
            [
                [s * math.cos(ang), -s * math.sin(ang), rng.uniform(-5, 5)],
                [s * math.sin(ang), s * math.cos(ang), rng.uniform(-5, 5)],
                [0, 0, 1.0],
            ]
        )
        a = Keypoint(rng.uniform(30, 50), rng.uniform(30, 50), rng.uniform(1, 3))
        b = Keypoint(rng.uniform(30, 50), rng.uniform(30, 50), rng.uniform(1, 3))
        e_ab = overlap_error(a, b, h)
        e_ba = overlap_error(b, a, np.linalg.inv(h))
        assert abs(e_ab - e_ba) < 0.02


def test_overlap_error_matches_circle_geometry():
    rng = np.random.default_rng(52)
    for _ in range(50):
        s = rng.uniform(0.5, 2.0)
        ang = rng.uniform(0, 2 * math.pi)
        h = np.array(
            [
                [s * math.cos(ang), -s * math.sin(ang), rng.uniform(-20, 20)],
                [s * math.sin(ang), s * math.cos(ang), rng.uniform(-20, 20)],
                [0, 0, 1.0],
            ]
        )
        a = Keypoint(rng.uniform(20, 40), rng.uniform(20, 40), rng.uniform(1, 4))
        b = Keypoint(rng.uniform(20, 40), rng.uniform(20, 40), rng.uniform(1, 4))
        ra = 3.0 * a.scale * s
        rb = 3.0 * b.scale
        center = h[:2, :2] @ (a.x, a.y) + h[:2, 2]
        inter = _circle_intersection(ra, rb, math.hypot(center[0] - b.x, center[1] - b.y))
        union = math.pi * (ra * ra + rb * rb) - inter
        expected = 1.0 - inter / union
        assert abs(overlap_error(a, b, h, samples=256) - expected) < 0.02


def test_overlap_error_behind_plane_raises():
    tilt = np.array([[1.0, 0, 0], [0, 1, 0], [-0.05, 0, 1]])
    with pytest.raises(ValueError):
        overlap_error(Keypoint(25.0, 5.0, 2.0), Keypoint(5.0, 5.0, 2.0), tilt)


def test_overlap_matrix_prefilter_is_transparent():
    rng = np.random.default_rng(53)
    kps_a = [
        Keypoint(rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(1, 3))
        for _ in range(8)
    ]
    kps_b = [
        Keypoint(rng.uniform(10, 90), rng.uniform(10, 90), rng.uniform(1, 3))
        for _ in range(7)
    ]
    ang = 0.3
    h = np.array(
        [
            [1.2 * math.cos(ang), -1.2 * math.sin(ang), 4.0],
            [1.2 * math.sin(ang), 1.2 * math.cos(ang), -2.0],
            [0, 0, 1.0],
        ]
    )
    full = overlap_error_matrix(kps_a, kps_b, h, prefilter=False)
    fast = overlap_error_matrix(kps_a, kps_b, h, prefilter=True)
    np.testing.assert_array_equal(full, fast)


def test_greedy_one_to_one_examples():
    pairs = greedy_one_to_one([[0.1, 0.4], [0.2, 0.3]])
    assert pairs == [(0, 0), (1, 1)]
    # all-tied entries resolve in row-major order
    assert greedy_one_to_one([[0.2, 0.2], [0.2, 0.2]]) == [(0, 0), (1, 1)]
    # the cutoff is strict
    assert greedy_one_to_one([[0.5]]) == []
    assert greedy_one_to_one(np.ones((0, 3))) == []


def test_greedy_one_to_one_matches_oracle():
    rng = np.random.default_rng(54)
    for _ in range(300):
        shape = (int(rng.integers(1, 12)), int(rng.integers(1, 12)))
        # quantized errors force plenty of ties
        e = rng.integers(0, 7, shape) / 10.0
        assert greedy_one_to_one(e) == _greedy_oracle(e, 0.5)


def test_ground_truth_identity():
    kps = [Keypoint(20.0 + 11.0 * i, 30.0, 2.0) for i in range(4)]
    assert ground_truth(kps, kps, np.eye(3)) == [(i, i) for i in range(4)]


def test_pr_curve_frozen_example():
    corr = [(0, 0), (1, 1)]
    pairs = [
        # one correct match below 0.5, one false
        type("P", (), {"index_a": 0, "index_b": 0, "distance_ratio": 0.2})(),
        type("P", (), {"index_a": 1, "index_b": 2, "distance_ratio": 0.4})(),
    ]
    curve = pr_curve(pairs, corr)
    assert len(curve.samples) == 20
    at = {round(s.threshold, 2): s for s in curve.samples}
    assert at[0.1].recall == 0.0 and at[0.1].one_minus_precision == 0.0
    assert at[0.3].recall == 0.5 and at[0.3].one_minus_precision == 0.0
    assert at[0.5].recall == 0.5 and at[0.5].one_minus_precision == 0.5
    assert at[0.5].num_correct == 1 and at[0.5].num_false == 1
    with pytest.raises(ValueError):
        pr_curve(pairs, [])


def test_pr_curve_random_consistency():
    rng = np.random.default_rng(55)
    for _ in range(100):
        n_corr = int(rng.integers(1, 8))
        corr = [(i, int(rng.integers(0, 8))) for i in range(n_corr)]
        pairs = [
            type(
                "P",
                (),
                {
                    "index_a": int(rng.integers(0, 8)),
                    "index_b": int(rng.integers(0, 8)),
                    "distance_ratio": float(rng.uniform(0, 1)),
                },
            )()
            for _ in range(int(rng.integers(0, 15)))
        ]
        curve = pr_curve(pairs, corr)
        cset = set(corr)
        prev_recall = -1.0
        for s in curve.samples:
            sel = [p for p in pairs if p.distance_ratio < s.threshold]
            ncorrect = sum((p.index_a, p.index_b) in cset for p in sel)
            assert s.num_correct == ncorrect
            assert s.num_false == len(sel) - ncorrect
            np.testing.assert_allclose(s.recall, ncorrect / len(cset))
            expected_omp = (len(sel) - ncorrect) / len(sel) if sel else 0.0
            np.testing.assert_allclose(s.one_minus_precision, expected_omp)
            assert s.recall >= prev_recall
            prev_recall = s.recall


def test_default_thresholds():
    ts = default_ratio_thresholds()
    assert len(ts) == 20
    np.testing.assert_allclose(ts, np.arange(1, 21) * 0.05, atol=1e-12)


def test_area_under_curve():
    curve = EvaluationCurve(
        [CurvePoint(0.5, 0.8, 0.6, 0, 0), CurvePoint(0.2, 0.4, 0.2, 0, 0)]
    )
    np.testing.assert_allclose(curve.area_under_curve(), 0.5 * (0.4 + 0.8) * 0.4)
    assert EvaluationCurve([CurvePoint(0.5, 1.0, 0.0, 0, 0)]).area_under_curve() == 0.0


def test_average_precision():
    np.testing.assert_allclose(average_precision([True, False, True]), 5.0 / 6.0)
    np.testing.assert_allclose(average_precision([False, True]), 0.5)
    assert average_precision([True]) == 1.0
    with pytest.raises(ValueError):
        average_precision([False, False])
