# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot per-pixel loops.

Operation-for-operation mirror of dci._kernels_py; dci.backend picks
whichever is importable.  Same conventions: [y, x] indexing, (x, y) vector
components last, replicate borders.
"""

import numpy as np

from libc.math cimport INFINITY, atan2, exp, fabs, floor, hypot, sqrt

cdef double TWO_PI = 6.283185307179586476925287


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def gradient(double[:, ::1] img):
    """Central-difference gradient, 0.5 * (right - left), replicate border."""
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w, 2))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, xm, xp, ym, yp
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            out[y, x, 0] = 0.5 * (img[y, xp] - img[y, xm])
            out[y, x, 1] = 0.5 * (img[yp, x] - img[ym, x])
    return out_arr


def laplacian(double[:, ::1] img):
    """4-neighbour Laplacian: sum of neighbours minus 4x centre."""
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((h, w))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, xm, xp, ym, yp
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            out[y, x] = (img[y, xm] + img[y, xp] + img[ym, x] + img[yp, x]) - 4.0 * img[y, x]
    return out_arr


def laplace_of_field(double[:, :, ::1] field):
    """Per-component v - mean(4 neighbours of v), replicate border."""
    cdef Py_ssize_t h = field.shape[0], w = field.shape[1]
    out_arr = np.empty((h, w, 2))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, c, xm, xp, ym, yp
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            for c in range(2):
                out[y, x, c] = field[y, x, c] - 0.25 * (
                    field[y, xm, c] + field[y, xp, c] + field[ym, x, c] + field[yp, x, c]
                )
    return out_arr


def separable_blur(double[:, ::1] img, double[::1] kernel):
    """Two-pass 1D correlation with an odd symmetric kernel, replicate border."""
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1], k = kernel.shape[0]
    cdef Py_ssize_t r = k // 2
    tmp_arr = np.empty((h, w))
    out_arr = np.empty((h, w))
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, t
    cdef double s
    for y in range(h):
        for x in range(w):
            s = 0.0
            for t in range(k):
                s += kernel[t] * img[y, _clamp(x + t - r, 0, w - 1)]
            tmp[y, x] = s
    for y in range(h):
        for x in range(w):
            s = 0.0
            for t in range(k):
                s += kernel[t] * tmp[_clamp(y + t - r, 0, h - 1), x]
            out[y, x] = s
    return out_arr


def bilinear_patch(double[:, ::1] img, double cx, double cy, double cos_t,
                   double sin_t, double spacing, Py_ssize_t side):
    """Sample a rotated square grid around (cx, cy) with bilinear interpolation."""
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.empty((side, side))
    cdef double[:, ::1] out = out_arr
    cdef double c = (side - 1) / 2.0
    cdef Py_ssize_t i, j, x0, y0
    cdef double u, v, px, py, fx, fy
    for i in range(side):
        v = (i - c) * spacing
        for j in range(side):
            u = (j - c) * spacing
            px = cx + u * cos_t - v * sin_t
            py = cy + u * sin_t + v * cos_t
            if px < 0.0:
                px = 0.0
            elif px > w - 1.0:
                px = w - 1.0
            if py < 0.0:
                py = 0.0
            elif py > h - 1.0:
                py = h - 1.0
            x0 = <Py_ssize_t>floor(px)
            y0 = <Py_ssize_t>floor(py)
            if x0 > w - 2:
                x0 = w - 2
            if y0 > h - 2:
                y0 = h - 2
            fx = px - x0
            fy = py - y0
            out[i, j] = (1.0 - fy) * ((1.0 - fx) * img[y0, x0] + fx * img[y0, x0 + 1]) + fy * (
                (1.0 - fx) * img[y0 + 1, x0] + fx * img[y0 + 1, x0 + 1]
            )
    return out_arr


def accumulate_grid(double[:, :, ::1] field, double spatial_sigma,
                    Py_ssize_t ncells=4, Py_ssize_t nbins=8):
    """Soft-binned orientation histogram grid over a square vector field.

    Magnitude times a centred Gaussian window, split linearly between the two
    nearest orientation bins and bilinearly between up to four nearest cells;
    fractions past the outer cells fold into the edge cells (mass conserved).
    """
    cdef Py_ssize_t n = field.shape[0]
    grid_arr = np.zeros((ncells, ncells, nbins))
    cdef double[:, :, ::1] grid = grid_arr
    cdef double c = (n - 1) / 2.0
    cdef double inv2s2 = 1.0 / (2.0 * spatial_sigma * spatial_sigma)
    cdef double cell = n / <double>ncells
    cdef Py_ssize_t y, x, o0, o1, cx0, cy0, cx_lo, cx_hi, cy_lo, cy_hi
    cdef double vx, vy, mag, wgt, theta, ob, fo, ux, uy, fx, fy
    cdef double wy0, wy1, wx0, wx1
    for y in range(n):
        for x in range(n):
            vx = field[y, x, 0]
            vy = field[y, x, 1]
            mag = hypot(vx, vy)
            if mag == 0.0:
                continue
            wgt = mag * exp(-((x - c) * (x - c) + (y - c) * (y - c)) * inv2s2)
            theta = atan2(vy, vx)
            if theta < 0.0:
                theta += TWO_PI
            ob = theta * (nbins / TWO_PI)
            if ob >= nbins:
                ob -= nbins
            o0 = <Py_ssize_t>floor(ob)
            fo = ob - o0
            o1 = (o0 + 1) % nbins

            ux = (x + 0.5) / cell - 0.5
            cx0 = <Py_ssize_t>floor(ux)
            fx = ux - cx0
            cx_lo = _clamp(cx0, 0, ncells - 1)
            cx_hi = _clamp(cx0 + 1, 0, ncells - 1)

            uy = (y + 0.5) / cell - 0.5
            cy0 = <Py_ssize_t>floor(uy)
            fy = uy - cy0
            cy_lo = _clamp(cy0, 0, ncells - 1)
            cy_hi = _clamp(cy0 + 1, 0, ncells - 1)

            wy0 = wgt * (1.0 - fy)
            wy1 = wgt * fy
            wx0 = 1.0 - fx
            wx1 = fx
            grid[cy_lo, cx_lo, o0] += wy0 * wx0 * (1.0 - fo)
            grid[cy_lo, cx_lo, o1] += wy0 * wx0 * fo
            grid[cy_lo, cx_hi, o0] += wy0 * wx1 * (1.0 - fo)
            grid[cy_lo, cx_hi, o1] += wy0 * wx1 * fo
            grid[cy_hi, cx_lo, o0] += wy1 * wx0 * (1.0 - fo)
            grid[cy_hi, cx_lo, o1] += wy1 * wx0 * fo
            grid[cy_hi, cx_hi, o0] += wy1 * wx1 * (1.0 - fo)
            grid[cy_hi, cx_hi, o1] += wy1 * wx1 * fo
    return grid_arr


def orientation_histogram(double[:, :, ::1] field, Py_ssize_t nbins=8):
    """Single soft-binned orientation histogram, magnitude weighted."""
    cdef Py_ssize_t h = field.shape[0], w = field.shape[1]
    hist_arr = np.zeros(nbins)
    cdef double[::1] hist = hist_arr
    cdef Py_ssize_t y, x, o0, o1
    cdef double vx, vy, mag, theta, ob, fo
    for y in range(h):
        for x in range(w):
            vx = field[y, x, 0]
            vy = field[y, x, 1]
            mag = hypot(vx, vy)
            if mag == 0.0:
                continue
            theta = atan2(vy, vx)
            if theta < 0.0:
                theta += TWO_PI
            ob = theta * (nbins / TWO_PI)
            if ob >= nbins:
                ob -= nbins
            o0 = <Py_ssize_t>floor(ob)
            fo = ob - o0
            o1 = (o0 + 1) % nbins
            hist[o0] += mag * (1.0 - fo)
            hist[o1] += mag * fo
    return hist_arr


def extrema_mask(double[:, :, ::1] stack, double threshold):
    """Strict 3x3x3 extrema of a (scales, H, W) stack with |value| > threshold."""
    cdef Py_ssize_t nk = stack.shape[0], h = stack.shape[1], w = stack.shape[2]
    out_arr = np.zeros((nk, h, w), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    cdef Py_ssize_t k, y, x, dk, dy, dx
    cdef double v, nb
    cdef bint is_max, is_min
    for k in range(1, nk - 1):
        for y in range(1, h - 1):
            for x in range(1, w - 1):
                v = stack[k, y, x]
                if fabs(v) <= threshold:
                    continue
                is_max = True
                is_min = True
                for dk in range(-1, 2):
                    for dy in range(-1, 2):
                        for dx in range(-1, 2):
                            if dk == 0 and dy == 0 and dx == 0:
                                continue
                            nb = stack[k + dk, y + dy, x + dx]
                            if nb >= v:
                                is_max = False
                            if nb <= v:
                                is_min = False
                        if not is_max and not is_min:
                            break
                    if not is_max and not is_min:
                        break
                if is_max or is_min:
                    out[k, y, x] = 1
    return out_arr


def top2_neighbors(double[:, ::1] queries, double[:, ::1] refs):
    """Indices and Euclidean distances of the two nearest reference rows.

    Ties resolve to the lower reference index.
    """
    cdef Py_ssize_t nq = queries.shape[0], nr = refs.shape[0], dim = queries.shape[1]
    if nr < 2:
        raise ValueError("need at least two reference rows")
    idx_arr = np.empty((nq, 2), dtype=np.int64)
    dist_arr = np.empty((nq, 2))
    cdef long long[:, ::1] idx = idx_arr
    cdef double[:, ::1] dist = dist_arr
    cdef Py_ssize_t i, j, t, j1, j2
    cdef double d, diff, b1, b2
    for i in range(nq):
        b1 = INFINITY
        b2 = INFINITY
        j1 = -1
        j2 = -1
        for j in range(nr):
            d = 0.0
            for t in range(dim):
                diff = queries[i, t] - refs[j, t]
                d += diff * diff
            if d < b1:
                b2 = b1
                j2 = j1
                b1 = d
                j1 = j
            elif d < b2:
                b2 = d
                j2 = j
        idx[i, 0] = j1
        idx[i, 1] = j2
        dist[i, 0] = sqrt(b1)
        dist[i, 1] = sqrt(b2)
    return idx_arr, dist_arr
