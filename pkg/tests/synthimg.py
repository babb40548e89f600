"""Synthetic test images with natural-image-like statistics.

Spectrally shaped noise (amplitude ~ 1/f^alpha) gives the smooth, scale-rich
texture the detector feeds on; random soft discs and oriented ridges add
blob and edge structure.  Everything is driven by a caller-supplied RNG so
tests stay deterministic.
"""

import numpy as np


def spectral_noise(rng, size, alpha=1.8):
    """Noise with a 1/f^alpha amplitude spectrum, zero mean, unit std."""
    white = rng.standard_normal((size, size))
    f = np.fft.fftfreq(size)
    fx, fy = np.meshgrid(f, f)
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0
    spectrum = np.fft.fft2(white) / radius**alpha
    spectrum[0, 0] = 0.0
    out = np.fft.ifft2(spectrum).real
    out /= out.std()
    return out


def natural_image(rng, size=256, n_blobs=12, n_ridges=6):
    """Smooth textured image in [0, 255] with soft blobs and oriented ridges."""
    img = spectral_noise(rng, size)
    yy, xx = np.mgrid[:size, :size].astype(np.float64)
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0.1 * size, 0.9 * size, 2)
        sigma = rng.uniform(2.0, 12.0)
        amp = rng.uniform(-2.5, 2.5)
        img += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2))
    for _ in range(n_ridges):
        angle = rng.uniform(0.0, np.pi)
        cx, cy = rng.uniform(0.1 * size, 0.9 * size, 2)
        width = rng.uniform(1.5, 6.0)
        amp = rng.uniform(-2.0, 2.0)
        dist = (xx - cx) * np.sin(angle) - (yy - cy) * np.cos(angle)
        img += amp * np.exp(-(dist**2) / (2 * width**2))
    lo, hi = img.min(), img.max()
    return 255.0 * (img - lo) / (hi - lo)


def random_keypoints(rng, shape, count, margin=20, scale_range=(1.5, 6.0)):
    """Keypoints at random interior positions with random scales, orientation 0."""
    from dci import Keypoint

    h, w = shape
    return [
        Keypoint(
            x=rng.uniform(margin, w - 1 - margin),
            y=rng.uniform(margin, h - 1 - margin),
            scale=rng.uniform(*scale_range),
        )
        for _ in range(count)
    ]
