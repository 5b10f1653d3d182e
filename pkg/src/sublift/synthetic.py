"""Deterministic synthetic inputs shared by the tests and demo scripts."""

import numpy as np

TWO_PI = 2.0 * np.pi


def piecewise_smooth_image(width=64, height=64, edge=3.5):
    """Smooth ramp background with a soft bright disk and dark box, in [0, 1].

    Edges are sigmoid profiles a few pixels wide so per-pixel differences
    stay moderate; ``edge`` controls the transition width.
    """
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    xn = x / max(width - 1, 1)
    yn = y / max(height - 1, 1)
    img = 0.35 + 0.25 * xn + 0.08 * np.sin(2.0 * np.pi * yn)
    r = np.sqrt((x - 0.3 * width) ** 2 + (y - 0.35 * height) ** 2)
    img += 0.35 / (1.0 + np.exp((r - 0.16 * width) / edge))
    bx = 1.0 / (1.0 + np.exp(-(x - 0.58 * width) / edge))
    bx *= 1.0 / (1.0 + np.exp((x - 0.85 * width) / edge))
    by = 1.0 / (1.0 + np.exp(-(y - 0.58 * height) / edge))
    by *= 1.0 / (1.0 + np.exp((y - 0.85 * height) / edge))
    img -= 0.30 * bx * by
    return np.clip(img, 0.0, 1.0)


def add_noise(img, rng, gauss_sigma=0.05, salt_pepper=0.05):
    """Additive gaussian noise plus salt-and-pepper outliers, clipped to [0, 1]."""
    out = img + rng.normal(0.0, gauss_sigma, size=img.shape)
    mask = rng.uniform(size=img.shape) < salt_pepper
    out[mask] = rng.integers(0, 2, size=int(mask.sum())).astype(np.float64)
    return np.clip(out, 0.0, 1.0)


def phase_ramp(width=32, height=32, span=2.0 * TWO_PI):
    """Linear phase ramp rising from 0 to span along x."""
    x = np.linspace(0.0, span, width)
    return np.tile(x, (height, 1))


def wrap_phase(phase):
    """Wrap into [0, 2*pi)."""
    return np.mod(phase, TWO_PI)


def smooth_texture(width, height, rng, passes=2):
    """Smooth random texture in [0, 1] (box-blurred white noise)."""
    img = rng.uniform(size=(height, width))
    for _ in range(passes):
        acc = np.zeros_like(img)
        for dy in (-1, 0, 1):
            rows = np.clip(np.arange(height) + dy, 0, height - 1)
            for dx in (-1, 0, 1):
                cols = np.clip(np.arange(width) + dx, 0, width - 1)
                acc += img[rows][:, cols]
        img = acc / 9.0
    img -= img.min()
    img /= max(img.max(), 1e-12)
    return img


def stereo_pair(width=48, height=48, shift=3, rng=None):
    """Textured left image and a right image shifted so disparity = shift.

    The right view places scene content shift pixels to the left, i.e.
    right(x - shift) = left(x).
    """
    rng = np.random.default_rng(7 if rng is None else rng)
    left = smooth_texture(width, height, rng)
    right = np.roll(left, -shift, axis=1)
    return left, right


def focus_stack(width=32, height=32, n_frames=4, rng=None):
    """Focal stack where frame j is sharp only inside horizontal band j.

    Returns (frames, depth) with depth holding the sharp frame index per
    pixel.
    """
    rng = np.random.default_rng(11 if rng is None else rng)
    texture = rng.uniform(size=(height, width))
    blurred = smooth_texture(width, height, rng, passes=3)
    bands = np.clip(
        (np.arange(height)[:, None] * n_frames) // height, 0, n_frames - 1
    ) * np.ones((1, width), dtype=np.int64)
    frames = []
    for j in range(n_frames):
        frame = blurred.copy()
        frame[bands == j] = texture[bands == j]
        frames.append(frame)
    return frames, bands.astype(np.float64)
