"""File formats: images, keypoint lists, descriptor sets, homographies, CSVs.

All writers go through an atomic temp-file + rename so a crashed run never
leaves a partial artifact behind.
"""

import os
import tempfile

import numpy as np

from .detector import Keypoint

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

DESC_MAGIC_TEXT = "DCI"
DESC_MAGIC_BINARY = "DCIB"


def atomic_write_bytes(path, data):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def luma(rgb):
    """Rec.601 luma of an (..., 3) array."""
    arr = np.asarray(rgb, dtype=np.float64)
    return (
        LUMA_WEIGHTS[0] * arr[..., 0]
        + LUMA_WEIGHTS[1] * arr[..., 1]
        + LUMA_WEIGHTS[2] * arr[..., 2]
    )


def _read_pnm_tokens(data, pos, count):
    """Read whitespace-separated ASCII tokens, skipping # comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if pos == start:
            raise ValueError("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos


def _read_pnm(data):
    magic = data[:2].decode("ascii", "replace")
    channels = 3 if magic in ("P3", "P6") else 1
    (wtok, htok, mtok), pos = _read_pnm_tokens(data, 2, 3)
    width, height, maxval = int(wtok), int(htok), int(mtok)
    if width <= 0 or height <= 0:
        raise ValueError(f"bad PNM dimensions {width}x{height}")
    if not (0 < maxval < 65536):
        raise ValueError(f"bad PNM maxval {maxval}")
    nvals = width * height * channels
    if magic in ("P2", "P3"):
        vals = np.array(data[pos:].split()[:nvals], dtype=np.float64)
        if vals.size != nvals:
            raise ValueError("truncated PNM pixel data")
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        raster = np.frombuffer(data, dtype=dtype, count=nvals, offset=pos)
        vals = raster.astype(np.float64)
    if np.any(vals > maxval):
        raise ValueError("PNM sample exceeds maxval")
    if channels == 3:
        return luma(vals.reshape(height, width, 3))
    return vals.reshape(height, width)


def load_image(path):
    """Grayscale float64 image in [0, maxval] (PGM natively, color via luma).

    PGM/PPM (P2, P3, P5, P6) are parsed directly; anything else is handed to
    Pillow when available.
    """
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] in (b"P2", b"P3", b"P5", b"P6"):
        try:
            return _read_pnm(data)
        except ValueError as e:
            raise ValueError(f"{path}: {e}") from None
    try:
        from PIL import Image
    except ImportError:
        raise ValueError(
            f"{path}: not a PGM/PPM file and Pillow is not installed"
        ) from None
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return luma(arr)


def save_pgm(path, image):
    """Write a binary 8-bit PGM (values clipped and rounded to 0..255)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM image must be 2D")
    raster = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = raster.shape
    atomic_write_bytes(path, f"P5\n{w} {h}\n255\n".encode() + raster.tobytes())


def _fmt(v):
    return f"{v:.10g}"


def save_keypoints(path, keypoints):
    lines = ["# x y scale orientation response"]
    for kp in keypoints:
        lines.append(
            " ".join(_fmt(v) for v in (kp.x, kp.y, kp.scale, kp.orientation, kp.response))
        )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def load_keypoints(path):
    kps = []
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            x, y, scale, orientation, response = map(float, parts)
            kps.append(Keypoint(x, y, scale, orientation, response))
    return kps


def save_descriptors(path, keypoints, descriptors, mode_label, binary=False):
    """Descriptor set with its keypoints.

    Text layout: header "DCI 128 <count> <mode>" then one line per entry
    "x y scale orientation d1 .. d128".  Binary layout: the header line with
    magic DCIB, then per entry 132 little-endian float32 values in the same
    order.  Degenerate descriptors are stored as all-zero rows; the magnitude
    carries the flag.
    """
    if len(keypoints) != len(descriptors):
        raise ValueError("keypoint and descriptor counts differ")
    dim = descriptors[0].values.shape[0] if descriptors else 128
    magic = DESC_MAGIC_BINARY if binary else DESC_MAGIC_TEXT
    header = f"{magic} {dim} {len(descriptors)} {mode_label}\n"
    if binary:
        rows = np.empty((len(descriptors), 4 + dim), dtype="<f4")
        for i, (kp, d) in enumerate(zip(keypoints, descriptors)):
            rows[i, :4] = (kp.x, kp.y, kp.scale, kp.orientation)
            rows[i, 4:] = d.values
        atomic_write_bytes(path, header.encode() + rows.tobytes())
        return
    lines = [header.rstrip("\n")]
    for kp, d in zip(keypoints, descriptors):
        head = (_fmt(kp.x), _fmt(kp.y), _fmt(kp.scale), _fmt(kp.orientation))
        lines.append(" ".join(head) + " " + " ".join(_fmt(v) for v in d.values))
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def load_descriptors(path):
    """Returns (keypoints, descriptors, mode_label); format auto-detected."""
    from .descriptor import Descriptor

    with open(path, "rb") as f:
        data = f.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing descriptor header")
    header = data[:nl].decode("ascii", "replace").split()
    if len(header) != 4 or header[0] not in (DESC_MAGIC_TEXT, DESC_MAGIC_BINARY):
        raise ValueError(f"{path}: bad descriptor header")
    dim, count = int(header[1]), int(header[2])
    mode_label = header[3]
    kps = []
    descs = []
    if header[0] == DESC_MAGIC_BINARY:
        rows = np.frombuffer(data, dtype="<f4", offset=nl + 1)
        if rows.size != count * (4 + dim):
            raise ValueError(f"{path}: truncated binary descriptor data")
        rows = rows.reshape(count, 4 + dim).astype(np.float64)
    else:
        body = data[nl + 1 :].split()
        if len(body) != count * (4 + dim):
            raise ValueError(f"{path}: truncated descriptor data")
        rows = np.array(body, dtype=np.float64).reshape(count, 4 + dim) if count else np.empty((0, 4 + dim))
    for row in rows:
        x, y, scale, orientation = row[:4]
        vals = row[4:].copy()
        kps.append(Keypoint(float(x), float(y), float(scale), float(orientation)))
        descs.append(Descriptor(vals, degenerate=not vals.any()))
    return kps, descs, mode_label


def load_homography(path):
    from .matching import check_homography

    rows = []
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            body = line.split("#", 1)[0].strip()
            if body:
                rows.append([float(t) for t in body.split()])
    m = np.array(rows, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"{path}: homography must be 3 lines of 3 numbers")
    return check_homography(m)


def save_homography(path, h):
    m = np.asarray(h, dtype=np.float64).reshape(3, 3)
    text = "\n".join(" ".join(_fmt(v) for v in row) for row in m) + "\n"
    atomic_write_bytes(path, text.encode())


def save_matches_csv(path, pairs):
    lines = ["index_a,index_b,distance,ratio"]
    for p in pairs:
        lines.append(f"{p.index_a},{p.index_b},{_fmt(p.distance)},{_fmt(p.distance_ratio)}")
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def save_curve_csv(path, curve):
    lines = ["threshold,recall,one_minus_precision,correct,false"]
    for s in curve.samples:
        lines.append(
            f"{_fmt(s.threshold)},{_fmt(s.recall)},{_fmt(s.one_minus_precision)},"
            f"{s.num_correct},{s.num_false}"
        )
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def load_curve_csv(path):
    from .matching import CurvePoint, EvaluationCurve

    with open(path, "r", encoding="ascii") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or lines[0] != "threshold,recall,one_minus_precision,correct,false":
        raise ValueError(f"{path}: bad curve CSV header")
    pts = []
    for ln in lines[1:]:
        t, r, omp, c, fls = ln.split(",")
        pts.append(CurvePoint(float(t), float(r), float(omp), int(c), int(fls)))
    return EvaluationCurve(pts)
