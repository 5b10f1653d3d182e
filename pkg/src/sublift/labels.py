"""Label-space bookkeeping and the scalar <-> lifted-vector bijection.

A scalar value in the range [gamma_1, gamma_L] is represented by a vector
u in R^k (k = L-1 intervals): u has ones for every interval fully below the
value, the fractional position alpha inside the containing interval, and
zeros above.  The inverse is the layer-cake sum
gamma_1 + sum_i u_i (gamma_{i+1} - gamma_i).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabelSpace:
    """Ordered label grid gamma_1 < ... < gamma_L partitioning the range."""

    gammas: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=np.float64)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("need at least two labels")
        if not np.all(np.isfinite(g)):
            raise ValueError("labels must be finite")
        if not np.all(np.diff(g) > 0):
            raise ValueError("labels must be strictly ascending")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def uniform(cls, lo, hi, n_labels):
        return cls(np.linspace(float(lo), float(hi), int(n_labels)))

    @property
    def L(self):
        return self.gammas.size

    @property
    def k(self):
        return self.gammas.size - 1

    @property
    def widths(self):
        """Interval widths h_i = gamma_{i+1} - gamma_i, shape (k,)."""
        return np.diff(self.gammas)

    @property
    def lo(self):
        return float(self.gammas[0])

    @property
    def hi(self):
        return float(self.gammas[-1])


@dataclass(frozen=True)
class GridShape:
    """2-D pixel grid; pixels are indexed row-major (y * width + x)."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def n_pixels(self):
        return self.width * self.height

    @property
    def d(self):
        return 2


@dataclass
class ScalarField:
    """One real value per pixel, stored flat (n_pixels,)."""

    grid: GridShape
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).reshape(-1))
        if v.size != self.grid.n_pixels:
            raise ValueError("value count does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @classmethod
    def from_image(cls, img):
        img = np.asarray(img, dtype=np.float64)
        if img.ndim != 2:
            raise ValueError("expected a 2-D image")
        return cls(GridShape(img.shape[1], img.shape[0]), img.reshape(-1))

    def to_image(self):
        return self.values.reshape(self.grid.height, self.grid.width)


@dataclass
class LiftedField:
    """One vector in R^k per pixel, shape (n_pixels, k).

    Entries may be infeasible during solver iterations; only after the
    monotone-box projection is 1 >= u_1 >= ... >= u_k >= 0 guaranteed.
    """

    grid: GridShape
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if v.ndim != 2 or v.shape[0] != self.grid.n_pixels:
            raise ValueError("lifted values must have shape (n_pixels, k)")
        self.values = v

    @property
    def k(self):
        return self.values.shape[1]


def _locate(ls, value):
    """Interval index i (1-based) and fraction alpha for a value in the range.

    Values at interior labels are assigned to the lower interval with
    alpha = 1, so the lifted vector is the same either way.
    """
    g = ls.gammas
    if value < g[0] or value > g[-1]:
        raise ValueError(f"value {value} outside label range [{g[0]}, {g[-1]}]")
    idx = int(np.searchsorted(g, value, side="left"))
    if idx == 0:
        return 1, 0.0
    i = idx
    alpha = (value - g[i - 1]) / (g[i] - g[i - 1])
    return i, float(alpha)


def lift(ls, value):
    """Lifted representation of a scalar: alpha*1_i + (1-alpha)*1_{i-1}."""
    i, alpha = _locate(ls, float(value))
    u = np.zeros(ls.k)
    u[: i - 1] = 1.0
    u[i - 1] = alpha
    return u


def unlift(ls, u):
    """Layer-cake inverse: gamma_1 + sum_i u_i (gamma_{i+1} - gamma_i)."""
    u = np.asarray(u, dtype=np.float64)
    return float(ls.lo + np.dot(u, ls.widths))


def lift_field(ls, sf):
    """Per-pixel lift of a ScalarField into a LiftedField."""
    g = ls.gammas
    vals = sf.values
    if vals.min() < g[0] or vals.max() > g[-1]:
        raise ValueError("field values outside label range")
    idx = np.clip(np.searchsorted(g, vals, side="left"), 1, ls.k)
    alpha = (vals - g[idx - 1]) / (g[idx] - g[idx - 1])
    cols = np.arange(ls.k)
    u = (cols[None, :] < (idx - 1)[:, None]).astype(np.float64)
    u[np.arange(vals.size), idx - 1] = alpha
    return LiftedField(sf.grid, u)


def unlift_field(ls, lf):
    """Project each pixel to the feasible monotone box, then unlift."""
    from .projections import proj_monotone_box

    feas = proj_monotone_box(lf.values)
    vals = ls.lo + feas @ ls.widths
    return ScalarField(lf.grid, vals)
