"""Command-line interface.

Subcommands: detect, describe, match, evaluate, stats.  Warnings go to
stderr; results go to the output file plus a short summary on stdout.  Every
run is deterministic and exits 0 only when the artifact was fully written.
"""

import argparse
import os
import sys

from . import fileio
from .backend import kernels
from .descriptor import FlipMode, describe, describe_hog_baseline, mean_histograms
from .detector import (
    NUM_SCALES,
    RESPONSE_THRESHOLD,
    SIGMA_MIN,
    SIGMA_STEP,
    detect_log,
    dominant_orientation_from_gradient,
)
from .matching import ground_truth, match_ratio, nearest_neighbor_pairs, pr_curve
from .ops import PATCH_MAGNIFICATION, PATCH_SIDE, as_image

IMAGE_SUFFIXES = (".pgm", ".pnm", ".ppm", ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def _detector_args(p):
    p.add_argument("--num-scales", type=int, default=NUM_SCALES)
    p.add_argument("--sigma-min", type=float, default=SIGMA_MIN)
    p.add_argument("--sigma-step", type=float, default=SIGMA_STEP)
    p.add_argument(
        "--threshold",
        type=float,
        default=RESPONSE_THRESHOLD,
        help="detector response threshold on [0,1] intensities",
    )


def _patch_args(p):
    p.add_argument("--side", type=int, default=PATCH_SIDE, help="patch side in pixels (odd)")
    p.add_argument(
        "--mag",
        type=float,
        default=PATCH_MAGNIFICATION,
        help="patch half-width in units of keypoint scale",
    )


def _detect_and_orient(image, args):
    kps = detect_log(
        image,
        num_scales=args.num_scales,
        sigma_min=args.sigma_min,
        sigma_step=args.sigma_step,
        response_threshold=args.threshold,
    )
    field = kernels.gradient(as_image(image))
    for kp in kps:
        kp.orientation, _ = dominant_orientation_from_gradient(field, kp)
    return kps


def _describe_all(image, keypoints, kind, mode, side, mag):
    """Descriptors for the in-bounds keypoints; out-of-bounds ones are skipped."""
    img = as_image(image)
    h, w = img.shape
    kept = []
    descs = []
    skipped = 0
    for i, kp in enumerate(keypoints):
        if not (0.0 <= kp.x <= w - 1 and 0.0 <= kp.y <= h - 1):
            print(
                f"warning: keypoint {i} at ({kp.x:.6g}, {kp.y:.6g}) is outside "
                f"the {w}x{h} image, skipped",
                file=sys.stderr,
            )
            skipped += 1
            continue
        if kind == "dci":
            d = describe(img, kp, mode, side=side, magnification=mag)
        else:
            d = describe_hog_baseline(img, kp, side=side, magnification=mag)
        kept.append(kp)
        descs.append(d)
    return kept, descs, skipped


def _zero_orientations(keypoints):
    for kp in keypoints:
        kp.orientation = 0.0


def cmd_detect(args):
    image = fileio.load_image(args.image)
    kps = _detect_and_orient(image, args)
    fileio.save_keypoints(args.out, kps)
    print(f"{len(kps)} keypoints -> {args.out}")
    return 0


def cmd_describe(args):
    image = fileio.load_image(args.image)
    keypoints = fileio.load_keypoints(args.keypoints)
    mode = FlipMode(args.mode)
    if mode is FlipMode.UPRIGHT:
        # upright semantics apply to the baseline too: patches stay axis-aligned
        _zero_orientations(keypoints)
    kept, descs, skipped = _describe_all(image, keypoints, args.kind, mode, args.side, args.mag)
    label = args.mode if args.kind == "dci" else "hog"
    fileio.save_descriptors(args.out, kept, descs, label, binary=args.binary)
    ndeg = sum(d.degenerate for d in descs)
    msg = f"{len(descs)} descriptors -> {args.out}"
    if skipped:
        msg += f" ({skipped} out-of-bounds keypoints skipped)"
    if ndeg:
        msg += f" ({ndeg} degenerate)"
    print(msg)
    return 0


def cmd_match(args):
    _, descs_a, _ = fileio.load_descriptors(args.desc_a)
    _, descs_b, _ = fileio.load_descriptors(args.desc_b)
    pairs = match_ratio(descs_a, descs_b, args.ratio)
    fileio.save_matches_csv(args.out, pairs)
    print(f"{len(pairs)} matches -> {args.out}")
    return 0


def cmd_evaluate(args):
    image_a = fileio.load_image(args.image_a)
    image_b = fileio.load_image(args.image_b)
    h = fileio.load_homography(args.homography)
    kps_a = _detect_and_orient(image_a, args)
    kps_b = _detect_and_orient(image_b, args)
    mode = FlipMode(args.mode)
    if mode is FlipMode.UPRIGHT:
        _zero_orientations(kps_a)
        _zero_orientations(kps_b)
    kept_a, descs_a, _ = _describe_all(image_a, kps_a, args.kind, mode, args.side, args.mag)
    kept_b, descs_b, _ = _describe_all(image_b, kps_b, args.kind, mode, args.side, args.mag)
    corr = ground_truth(kept_a, kept_b, h)
    pairs = nearest_neighbor_pairs(descs_a, descs_b)
    curve = pr_curve(pairs, corr)
    fileio.save_curve_csv(args.out, curve)
    print(f"correspondences: {len(corr)}")
    print(f"auc: {curve.area_under_curve():.6g}")
    print(f"curve -> {args.out}")
    return 0


def cmd_stats(args):
    names = sorted(
        n
        for n in os.listdir(args.corpus)
        if os.path.splitext(n)[1].lower() in IMAGE_SUFFIXES
    )
    corpus = []
    total = 0
    for name in names:
        path = os.path.join(args.corpus, name)
        try:
            image = fileio.load_image(path)
            kps = _detect_and_orient(image, args)
        except ValueError as e:
            print(f"warning: skipping {path}: {e}", file=sys.stderr)
            continue
        corpus.append((image, kps))
        total += len(kps)
    if not corpus:
        raise ValueError(f"no readable images in {args.corpus}")
    mean_hog, mean_holg = mean_histograms(corpus, side=args.side, magnification=args.mag)
    lines = ["bin,mean_hog,mean_holg"]
    for i in range(len(mean_hog)):
        lines.append(f"{i},{mean_hog[i]:.10g},{mean_holg[i]:.10g}")
    fileio.atomic_write_bytes(args.out, ("\n".join(lines) + "\n").encode())
    print(f"keypoints: {total}")
    print(f"hog bin0/bin1: {mean_hog[0] / mean_hog[1]:.4g}")
    print(f"holg bin0/bin1: {mean_holg[0] / mean_holg[1]:.4g}")
    print(f"stats -> {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dci", description="Contrast-invertible local feature descriptor tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect blob keypoints and estimate orientations")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="output keypoint file")
    _detector_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("describe", help="compute descriptors for a keypoint file")
    p.add_argument("image")
    p.add_argument("keypoints")
    p.add_argument("--kind", choices=("dci", "hog"), default="dci")
    p.add_argument("--mode", choices=("upright", "oriented"), default="upright")
    p.add_argument("--binary", action="store_true", help="write the binary layout")
    p.add_argument("--out", required=True, help="output descriptor file")
    _patch_args(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("match", help="ratio-test matches between two descriptor files")
    p.add_argument("desc_a")
    p.add_argument("desc_b")
    p.add_argument("--ratio", type=float, default=0.8, help="distance-ratio threshold")
    p.add_argument("--out", required=True, help="output match CSV")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser(
        "evaluate", help="recall / 1-precision curve for an image pair under a homography"
    )
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("homography")
    p.add_argument("--kind", choices=("dci", "hog"), default="dci")
    p.add_argument("--mode", choices=("upright", "oriented"), default="upright")
    p.add_argument("--out", required=True, help="output curve CSV")
    _detector_args(p)
    _patch_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="corpus mean orientation histograms")
    p.add_argument("corpus", help="directory of images")
    p.add_argument("--out", required=True, help="output CSV")
    _detector_args(p)
    _patch_args(p)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
