"""Builders turning application inputs into dataterm volumes and cost volumes.

Each builder also comes with a matching cost evaluator (per-pixel range
positions -> per-pixel true costs) so the solvers can log the unconvexified
model energy.
"""

import numpy as np

from .dataterm import CostVolume, DatatermVolume, sample_costs
from .labels import GridShape

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Quadratic-difference denoising


def rof_cost_fn(f):
    """Pointwise cost (gamma - f)^2; accepts scalar or per-pixel gamma."""
    fv = f.values

    def cost(gamma):
        return (np.asarray(gamma, dtype=np.float64) - fv) ** 2

    return cost


def build_rof(f, ls):
    """Exact quadratic pieces for the quadratic-difference dataterm.

    Input values are clamped into the label range first; the model's
    minimizer lies in the convex hull of the data so clamping is lossless.
    """
    fv = np.clip(f.values, ls.lo, ls.hi)
    N, k = f.grid.n_pixels, ls.k
    qa = np.ones((N, k))
    qb = np.broadcast_to(-2.0 * fv[:, None], (N, k)).copy()
    qc = np.broadcast_to((fv * fv)[:, None], (N, k)).copy()
    return DatatermVolume.from_quadratic(f.grid, ls, qa, qb, qc)


# ---------------------------------------------------------------------------
# Robust truncated quadratic


def trunc_quad_cost_fn(f, alpha, nu):
    """(alpha/2) * min((gamma - f)^2, nu)."""
    fv = f.values
    a = float(alpha)
    n = float(nu)

    def cost(gamma):
        d = np.asarray(gamma, dtype=np.float64) - fv
        return 0.5 * a * np.minimum(d * d, n)

    return cost


def build_trunc_quad(f, alpha, nu, ls, samples_per_interval=8):
    """Sampled-and-hulled pieces of the truncated quadratic cost.

    Intervals entirely in the truncated region collapse to the constant
    piece alpha*nu/2 automatically.
    """
    if alpha <= 0 or nu <= 0:
        raise ValueError("alpha and nu must be > 0")
    return sample_costs(trunc_quad_cost_fn(f, alpha, nu), f.grid, ls, samples_per_interval)


# ---------------------------------------------------------------------------
# Stereo matching


def _central_gradients(img):
    gx = np.empty_like(img)
    gy = np.empty_like(img)
    gx[:, 1:-1] = 0.5 * (img[:, 2:] - img[:, :-2])
    gx[:, 0] = 0.5 * (img[:, 1] - img[:, 0])
    gx[:, -1] = 0.5 * (img[:, -1] - img[:, -2])
    gy[1:-1, :] = 0.5 * (img[2:, :] - img[:-2, :])
    gy[0, :] = 0.5 * (img[1, :] - img[0, :])
    gy[-1, :] = 0.5 * (img[-1, :] - img[-2, :])
    return gx, gy


def _sample_shifted(img, shift):
    """img evaluated at column x - shift, linearly interpolated, edge-clamped."""
    H, W = img.shape
    pos = np.arange(W, dtype=np.float64) - shift
    lo = np.clip(np.floor(pos).astype(np.int64), 0, W - 1)
    hi = np.clip(lo + 1, 0, W - 1)
    w = np.clip(pos - lo, 0.0, 1.0)
    return (1.0 - w)[None, :] * img[:, lo] + w[None, :] * img[:, hi]


def build_stereo_cost(left, right, disparities, patch=4, trunc=0.5):
    """Patch-summed truncated absolute gradient differences per disparity.

    cost(x, d) sums min(|grad_x L - grad_x R(. - d)|, trunc) +
    min(|grad_y L - grad_y R(. - d)|, trunc) over a patch x patch window;
    out-of-bounds samples are edge-clamped.  Intensities are expected in
    [0, 1]; returns a CostVolume over the disparity range.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape or left.ndim != 2:
        raise ValueError("stereo needs two equally sized grayscale images")
    disparities = np.asarray(disparities, dtype=np.float64)
    if disparities.size < 2 or not np.all(np.diff(disparities) > 0):
        raise ValueError("need an ascending list of at least two disparities")
    H, W = left.shape
    lgx, lgy = _central_gradients(left)
    rgx, rgy = _central_gradients(right)
    offs = np.arange(patch) - (patch // 2 - 1)  # 4 -> [-1, 0, 1, 2]
    rows = np.clip(np.arange(H)[:, None] + offs[None, :], 0, H - 1)
    cols = np.clip(np.arange(W)[:, None] + offs[None, :], 0, W - 1)
    costs = np.empty((H * W, disparities.size))
    for di, d in enumerate(disparities):
        sgx = _sample_shifted(rgx, d)
        sgy = _sample_shifted(rgy, d)
        diff = np.minimum(np.abs(lgx - sgx), trunc) + np.minimum(np.abs(lgy - sgy), trunc)
        # separable patch sum with edge clamping
        acc = diff[:, cols].sum(axis=2)
        acc = acc[rows, :].sum(axis=1)
        costs[:, di] = acc.reshape(-1)
    return CostVolume(
        GridShape(W, H), float(disparities[0]), float(disparities[-1]), costs
    )


# ---------------------------------------------------------------------------
# Phase unwrapping


def _wrap_to_pi(x):
    return np.mod(x + np.pi, TWO_PI) - np.pi


def unwrap_cost_fn(f):
    """Squared circle distance between the candidate phase and the data."""
    fv = f.values

    def cost(gamma):
        return _wrap_to_pi(np.asarray(gamma, dtype=np.float64) - fv) ** 2

    return cost


def build_unwrap(f, ls, samples_per_interval=16):
    """Per-interval quadratic branch of the cyclic squared distance.

    On each interval the branch (u - f - 2 pi m)^2 with m chosen at the
    interval midpoint is exact whenever no branch crossing falls inside;
    otherwise that (pixel, interval) falls back to sample-and-hull of the
    true cyclic cost.
    """
    fv = f.values
    if fv.min() < 0 or fv.max() >= TWO_PI:
        raise ValueError("wrapped phase must lie in [0, 2*pi)")
    N, k = f.grid.n_pixels, ls.k
    g = ls.gammas
    qa = np.ones((N, k))
    qb = np.empty((N, k))
    qc = np.empty((N, k))
    exact = np.empty((N, k), dtype=bool)
    for i in range(k):
        mid = 0.5 * (g[i] + g[i + 1])
        m = np.round((mid - fv) / TWO_PI)
        center = fv + TWO_PI * m
        qb[:, i] = -2.0 * center
        qc[:, i] = center * center
        exact[:, i] = (np.abs(g[i] - center) <= np.pi + 1e-12) & (
            np.abs(g[i + 1] - center) <= np.pi + 1e-12
        )
    if exact.all():
        return DatatermVolume.from_quadratic(f.grid, ls, qa, qb, qc)
    hulled = sample_costs(unwrap_cost_fn(f), f.grid, ls, samples_per_interval)
    return DatatermVolume(f.grid, ls, exact, qa, qb, qc, hulled.pg, hulled.pv, hulled.pcnt)


# ---------------------------------------------------------------------------
# Depth from focus


def _box3(img):
    out = np.zeros_like(img)
    H, W = img.shape
    for dy in (-1, 0, 1):
        rows = np.clip(np.arange(H) + dy, 0, H - 1)
        for dx in (-1, 0, 1):
            cols = np.clip(np.arange(W) + dx, 0, W - 1)
            out += img[rows][:, cols]
    return out


def focus_contrast(img, window=3):
    """Windowed modified-Laplacian contrast |I_xx| + |I_yy|."""
    img = np.asarray(img, dtype=np.float64)
    ixx = np.zeros_like(img)
    iyy = np.zeros_like(img)
    ixx[:, 1:-1] = img[:, 2:] - 2.0 * img[:, 1:-1] + img[:, :-2]
    iyy[1:-1, :] = img[2:, :] - 2.0 * img[1:-1, :] + img[:-2, :]
    ml = np.abs(ixx) + np.abs(iyy)
    if window == 3:
        return _box3(ml)
    if window == 1:
        return ml
    raise ValueError("supported contrast windows: 1 or 3")


def build_dff_cost(stack, window=3):
    """Cost volume from a focal stack: low cost where contrast peaks.

    cost(x, j) = max_j' contrast_{j'}(x) - contrast_j(x) >= 0, so minimizing
    selects the frame of locally maximal contrast; the label space is the
    frame index range [0, M-1].
    """
    imgs = [np.asarray(im, dtype=np.float64) for im in stack]
    if len(imgs) < 2:
        raise ValueError("focal stack needs at least two images")
    shape = imgs[0].shape
    if any(im.shape != shape for im in imgs):
        raise ValueError("focal stack images must be aligned and equal-sized")
    contrast = np.stack([focus_contrast(im, window).reshape(-1) for im in imgs], axis=1)
    costs = contrast.max(axis=1, keepdims=True) - contrast
    H, W = shape
    return CostVolume(GridShape(W, H), 0.0, float(len(imgs) - 1), costs)
