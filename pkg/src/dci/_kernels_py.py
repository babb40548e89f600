"""NumPy fallback for the compiled kernels.

Mirrors dci._kernels operation for operation; dci.backend selects this module
when the extension is unavailable or DCI_PURE_PYTHON is set.  All functions
expect C-contiguous float64 arrays (the layer above guarantees it).

Convention: images are indexed [row, col] = [y, x]; vector fields carry the
(x, y) components in the last axis.  Out-of-range stencil taps replicate the
nearest edge value.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def gradient(img):
    """Central-difference gradient, 0.5 * (right - left), replicate border."""
    p = np.pad(img, 1, mode="edge")
    out = np.empty(img.shape + (2,))
    out[..., 0] = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    out[..., 1] = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return out


def laplacian(img):
    """4-neighbour Laplacian: sum of neighbours minus 4x centre."""
    p = np.pad(img, 1, mode="edge")
    return (p[1:-1, :-2] + p[1:-1, 2:] + p[:-2, 1:-1] + p[2:, 1:-1]) - 4.0 * img


def laplace_of_field(field):
    """Per-component v - mean(4 neighbours of v), replicate border."""
    p = np.pad(field, ((1, 1), (1, 1), (0, 0)), mode="edge")
    return field - 0.25 * (
        p[1:-1, :-2] + p[1:-1, 2:] + p[:-2, 1:-1] + p[2:, 1:-1]
    )


def separable_blur(img, kernel):
    """Two-pass 1D correlation with an odd symmetric kernel, replicate border."""
    k = kernel.shape[0]
    r = k // 2
    h, w = img.shape
    p = np.pad(img, ((0, 0), (r, r)), mode="edge")
    tmp = np.zeros_like(img)
    for t in range(k):
        tmp += kernel[t] * p[:, t : t + w]
    p = np.pad(tmp, ((r, r), (0, 0)), mode="edge")
    out = np.zeros_like(img)
    for t in range(k):
        out += kernel[t] * p[t : t + h, :]
    return out


def bilinear_patch(img, cx, cy, cos_t, sin_t, spacing, side):
    """Sample a rotated square grid around (cx, cy) with bilinear interpolation.

    Grid row i, column j sits at offset ((j - c) * spacing, (i - c) * spacing)
    rotated by the angle whose cosine/sine are given; samples outside the
    image clamp to the border (replicate).
    """
    h, w = img.shape
    c = (side - 1) / 2.0
    off = (np.arange(side) - c) * spacing
    px = cx + off[None, :] * cos_t - off[:, None] * sin_t
    py = cy + off[None, :] * sin_t + off[:, None] * cos_t
    np.clip(px, 0.0, w - 1.0, out=px)
    np.clip(py, 0.0, h - 1.0, out=py)
    x0 = np.floor(px).astype(np.int64)
    y0 = np.floor(py).astype(np.int64)
    np.minimum(x0, w - 2, out=x0)
    np.minimum(y0, h - 2, out=y0)
    fx = px - x0
    fy = py - y0
    i00 = img[y0, x0]
    i01 = img[y0, x0 + 1]
    i10 = img[y0 + 1, x0]
    i11 = img[y0 + 1, x0 + 1]
    return (1.0 - fy) * ((1.0 - fx) * i00 + fx * i01) + fy * (
        (1.0 - fx) * i10 + fx * i11
    )


def _soft_orientation(vx, vy, nbins):
    # bin coordinate in [0, nbins); bin centres sit at k * 2pi / nbins
    theta = np.arctan2(vy, vx)
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    ob = theta * (nbins / TWO_PI)
    ob = np.where(ob >= nbins, ob - nbins, ob)
    o0 = np.floor(ob).astype(np.int64)
    fo = ob - o0
    o1 = (o0 + 1) % nbins
    return o0, o1, fo


def accumulate_grid(field, spatial_sigma, ncells=4, nbins=8):
    """Soft-binned orientation histogram grid over a square vector field.

    Each pixel contributes its vector magnitude, attenuated by a centred
    Gaussian window, split linearly between the two nearest orientation bins
    and bilinearly between the up-to-four nearest cells.  Fractions falling
    past the outer cells fold into the edge cells so total mass is conserved.
    """
    n = field.shape[0]
    vx = field[..., 0]
    vy = field[..., 1]
    mag = np.hypot(vx, vy)
    c = (n - 1) / 2.0
    ax = np.arange(n, dtype=np.float64)
    w = mag * np.exp(
        -((ax[None, :] - c) ** 2 + (ax[:, None] - c) ** 2)
        / (2.0 * spatial_sigma * spatial_sigma)
    )

    o0, o1, fo = _soft_orientation(vx, vy, nbins)

    cell = n / ncells
    u = (ax + 0.5) / cell - 0.5
    u0 = np.floor(u).astype(np.int64)
    fu = u - u0
    lo = np.clip(u0, 0, ncells - 1)
    hi = np.clip(u0 + 1, 0, ncells - 1)

    cy0, cy1, fy = lo[:, None], hi[:, None], fu[:, None]
    cx0, cx1, fx = lo[None, :], hi[None, :], fu[None, :]

    grid = np.zeros(ncells * ncells * nbins)
    for cyy, wy in ((cy0, 1.0 - fy), (cy1, fy)):
        for cxx, wx in ((cx0, 1.0 - fx), (cx1, fx)):
            base = (cyy * ncells + cxx) * nbins
            for oo, wo in ((o0, 1.0 - fo), (o1, fo)):
                idx = (base + oo).ravel()
                grid += np.bincount(
                    idx, weights=(w * wy * wx * wo).ravel(), minlength=grid.size
                )
    return grid.reshape(ncells, ncells, nbins)


def orientation_histogram(field, nbins=8):
    """Single soft-binned orientation histogram, magnitude weighted."""
    vx = field[..., 0]
    vy = field[..., 1]
    mag = np.hypot(vx, vy)
    o0, o1, fo = _soft_orientation(vx, vy, nbins)
    hist = np.bincount(o0.ravel(), weights=(mag * (1.0 - fo)).ravel(), minlength=nbins)
    hist += np.bincount(o1.ravel(), weights=(mag * fo).ravel(), minlength=nbins)
    return hist


def extrema_mask(stack, threshold):
    """Strict 3x3x3 extrema of a (scales, H, W) stack with |value| > threshold."""
    k, h, w = stack.shape
    core = stack[1:-1, 1:-1, 1:-1]
    is_max = np.ones(core.shape, dtype=bool)
    is_min = np.ones(core.shape, dtype=bool)
    for dk in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dk == 0 and dy == 0 and dx == 0:
                    continue
                nb = stack[1 + dk : k - 1 + dk, 1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
                is_max &= core > nb
                is_min &= core < nb
    out = np.zeros(stack.shape, dtype=np.uint8)
    out[1:-1, 1:-1, 1:-1] = (np.abs(core) > threshold) & (is_max | is_min)
    return out


def top2_neighbors(queries, refs):
    """Indices and Euclidean distances of the two nearest reference rows.

    Ties resolve to the lower reference index.
    """
    nq = queries.shape[0]
    nr = refs.shape[0]
    if nr < 2:
        raise ValueError("need at least two reference rows")
    idx = np.empty((nq, 2), dtype=np.int64)
    dist = np.empty((nq, 2), dtype=np.float64)
    dim = max(1, queries.shape[1])
    chunk = max(1, 4_000_000 // (nr * dim))
    for s in range(0, nq, chunk):
        block = queries[s : s + chunk]
        d2 = ((block[:, None, :] - refs[None, :, :]) ** 2).sum(axis=2)
        j1 = np.argmin(d2, axis=1)
        r = np.arange(block.shape[0])
        d1 = d2[r, j1].copy()
        d2[r, j1] = np.inf
        j2 = np.argmin(d2, axis=1)
        d2nd = d2[r, j2]
        idx[s : s + chunk, 0] = j1
        idx[s : s + chunk, 1] = j2
        dist[s : s + chunk, 0] = np.sqrt(d1)
        dist[s : s + chunk, 1] = np.sqrt(d2nd)
    return idx, dist
