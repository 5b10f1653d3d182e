"""Exact orthogonal projections onto the constraint sets of the saddle problem.

Covers the dual ball of the lifted total variation (rowwise norm bounds),
the epigraphs of the conjugated convex pieces (parabola and piecewise-linear
cases), and the primal feasible monotone box.
"""

import enum

import numpy as np

from . import _kernels


class RegularizerKind(enum.Enum):
    """Isotropic TV uses the l2 row norm, anisotropic (l1-TV) the l-inf dual."""

    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        key = str(s).lower()
        if key in ("iso", "isotropic", "l2"):
            return cls.ISOTROPIC
        if key in ("aniso", "anisotropic", "l1"):
            return cls.ANISOTROPIC
        raise ValueError(f"unknown regularizer kind: {s!r}")


def proj_ball_l2(x, radius):
    """Project onto the l2 ball of given radius (last axis is the vector)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    n = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    scale = np.where(n > radius, radius / np.maximum(n, 1e-300), 1.0)
    return x * scale


def proj_ball_linf(x, radius):
    """Project onto the l-inf ball: componentwise clamp to [-radius, radius]."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return np.clip(np.asarray(x, dtype=np.float64), -radius, radius)


def proj_K(P, ls, kind=RegularizerKind.ISOTROPIC, scale=1.0):
    """Project dual gradient matrices onto the lifted-TV constraint set.

    Row i of each k x d matrix is projected onto the ball of radius
    scale * (gamma_{i+1} - gamma_i); l2 balls for isotropic TV, l-inf for
    anisotropic.  Accepts a single (k, d) matrix or a batch (..., k, d).
    """
    kind = RegularizerKind.parse(kind)
    P = np.asarray(P, dtype=np.float64)
    radii = scale * ls.widths  # (k,)
    if kind is RegularizerKind.ANISOTROPIC:
        r = radii[..., :, None]
        return np.clip(P, -r, r)
    n = np.sqrt(np.sum(P * P, axis=-1, keepdims=True))
    r = radii[..., :, None]
    fac = np.where(n > r, r / np.maximum(n, 1e-300), 1.0)
    return P * fac


def proj_parabola_epigraph(point, a):
    """Project onto {(x, y): y >= a x^2}, a > 0.

    Interior points are unchanged; boundary feet are found by safeguarded
    bisection (60 iterations) on the cubic first-order condition
    2 a^2 x^3 + (1 - 2 a y) x - x_in = 0.
    Accepts a single point (2,) or a batch (..., 2).
    """
    if a <= 0:
        raise ValueError("curvature a must be > 0")
    pt = np.asarray(point, dtype=np.float64)
    single = pt.ndim == 1
    flat = pt.reshape(-1, 2)
    av = np.full(flat.shape[0], float(a))
    x, y = _kernels.parabola_project(
        np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]), av
    )
    out = np.stack([x, y], axis=-1)
    return out.reshape(2) if single else out.reshape(pt.shape)


def proj_polyline_conjugate_epigraph(point, piece):
    """Project onto the epigraph of a PolyLine piece's conjugate.

    The conjugate is max_m (gamma_m t - rho_m): slopes are the vertex
    positions, intercepts the vertex values.  The epigraph is an
    intersection of halfplanes; the nearest point sits on an affine branch
    or a kink, both covered by the clamped segment scan.
    """
    from .dataterm import PolyLine

    if not isinstance(piece, PolyLine):
        raise TypeError("expected a PolyLine piece")
    pt = np.asarray(point, dtype=np.float64)
    single = pt.ndim == 1
    flat = pt.reshape(-1, 2)
    m = piece.gammas.size
    G = np.broadcast_to(piece.gammas, (flat.shape[0], m)).copy()
    R = np.broadcast_to(piece.values, (flat.shape[0], m)).copy()
    cnt = np.full(flat.shape[0], m, dtype=np.int64)
    t, w = _kernels.polyline_conj_epi_project(
        np.ascontiguousarray(flat[:, 0]), np.ascontiguousarray(flat[:, 1]), G, R, cnt
    )
    out = np.stack([t, w], axis=-1)
    return out.reshape(2) if single else out.reshape(pt.shape)


def proj_monotone_box(u):
    """Project onto {1 >= u_1 >= ... >= u_k >= 0}.

    Isotonic regression (pool-adjacent-violators for the nonincreasing
    chain) followed by clamping to [0, 1]; clamping commutes with the
    isotonic solution so the composition is the exact projection.
    Accepts (k,) vectors or (B, k) batches.
    """
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    rows = np.ascontiguousarray(u.reshape(-1, u.shape[-1]))
    fit = _kernels.pav_nonincreasing(rows)
    np.clip(fit, 0.0, 1.0, out=fit)
    return fit[0] if single else fit.reshape(u.shape)
