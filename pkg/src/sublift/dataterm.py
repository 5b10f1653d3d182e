"""Per-interval convex pieces of the dataterm and their conjugates.

Each (pixel, interval) pair carries one convex piece: either a quadratic
a*g^2 + b*g + c restricted to the interval, or the lower convex hull of
cost samples (a polyline).  The lifted dataterm only ever needs the
conjugates of these pieces and projections onto their epigraphs, so both
forms are stored in dense arrays for the solver.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

_AFFINE_EPS = 1e-10  # quadratics with smaller curvature are handled as affine


@dataclass(frozen=True)
class Quadratic:
    """Convex quadratic a*g^2 + b*g + c on the interval [lo, hi]."""

    a: float
    b: float
    c: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("quadratic piece must be convex (a >= 0)")
        if not self.lo < self.hi:
            raise ValueError("empty interval")


@dataclass(frozen=True)
class PolyLine:
    """Convex piecewise-linear piece given by its hull vertices.

    gammas are strictly ascending with the interval endpoints first/last;
    chord slopes are strictly increasing (interior collinear vertices are
    dropped at construction).
    """

    gammas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if g.size != v.size or g.size < 2:
            raise ValueError("polyline needs >= 2 vertices")
        if not np.all(np.diff(g) > 0):
            raise ValueError("vertex positions must be strictly ascending")
        if g.size > 2:
            slopes = np.diff(v) / np.diff(g)
            if not np.all(np.diff(slopes) > 0):
                raise ValueError("polyline must be strictly convex across vertices")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "values", v)

    @property
    def lo(self):
        return float(self.gammas[0])

    @property
    def hi(self):
        return float(self.gammas[-1])


ConvexPiece = (Quadratic, PolyLine)


def quadratic_piece(a, b, c, lo, hi):
    """Validated convex quadratic piece (a >= 0; a = 0 is an affine piece)."""
    return Quadratic(float(a), float(b), float(c), float(lo), float(hi))


def convexify_interval(gammas, costs):
    """Lower convex hull of cost samples on one interval.

    The returned PolyLine evaluates to the convex envelope of the
    piecewise-linear interpolant of the samples (the pointwise max of all
    affine minorants of the sample set).
    """
    g = np.asarray(gammas, dtype=np.float64)
    v = np.asarray(costs, dtype=np.float64)
    if g.size < 2:
        raise ValueError("need at least two samples")
    if g.size != v.size:
        raise ValueError("sample arrays must have equal length")
    if not np.all(np.diff(g) > 0):
        raise ValueError("sample positions must be strictly ascending")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
        raise ValueError("samples must be finite")
    hx, hy, hn = _kernels.lower_hull_batch(
        g.reshape(1, -1), v.reshape(1, -1), np.array([g.size], dtype=np.int64)
    )
    n = int(hn[0])
    return PolyLine(hx[0, :n].copy(), hy[0, :n].copy())


def piece_eval(piece, g):
    """Evaluate a piece at positions g (clamped into its interval)."""
    g = np.clip(np.asarray(g, dtype=np.float64), piece.lo, piece.hi)
    if isinstance(piece, Quadratic):
        return piece.a * g * g + piece.b * g + piece.c
    return np.interp(g, piece.gammas, piece.values)


def conjugate_eval(piece, t):
    """Conjugate of a piece over its interval: sup_g t*g - piece(g).

    For a polyline the sup sits on a vertex; for a quadratic the closed-form
    maximizer is clamped to the interval.
    """
    t = np.asarray(t, dtype=np.float64)
    if isinstance(piece, PolyLine):
        return np.max(t[..., None] * piece.gammas - piece.values, axis=-1)
    if piece.a > _AFFINE_EPS:
        gm = np.clip((t - piece.b) / (2.0 * piece.a), piece.lo, piece.hi)
    else:
        gm = np.where(t >= piece.b, piece.hi, piece.lo)
    return t * gm - (piece.a * gm * gm + piece.b * gm + piece.c)


def lifted_conjugate_eval(ls, pieces, v, i):
    """Conjugate of the i-th lifted dataterm branch at a dual vector v.

    Implements <1_{i-1}, v> - (gamma_i / h_i) v_i + conj_i(v_i / h_i) for
    interval index i (1-based), where conj_i is the piece conjugate.
    """
    if not 1 <= i <= ls.k:
        raise ValueError("interval index out of range")
    v = np.asarray(v, dtype=np.float64)
    g = ls.gammas
    h = float(g[i] - g[i - 1])
    head = float(np.sum(v[: i - 1]))
    return head - (g[i - 1] / h) * v[i - 1] + float(conjugate_eval(pieces[i - 1], v[i - 1] / h))


def _pad_polylines(pieces):
    """Pack a flat list of PolyLines into padded (B, M) vertex arrays."""
    B = len(pieces)
    M = max(p.gammas.size for p in pieces)
    G = np.empty((B, M))
    R = np.empty((B, M))
    cnt = np.empty(B, dtype=np.int64)
    for r, p in enumerate(pieces):
        m = p.gammas.size
        G[r, :m] = p.gammas
        R[r, :m] = p.values
        G[r, m:] = p.gammas[-1]
        R[r, m:] = p.values[-1]
        cnt[r] = m
    return G, R, cnt


class DatatermVolume:
    """One convex piece per (pixel, interval), stored densely.

    Quadratic coefficients live in (N, k) arrays, polyline vertices in
    padded (N, k, M) arrays; ``is_quad`` says which representation a given
    entry uses.  Affine quadratics (a ~ 0) are stored as two-vertex
    polylines since their conjugate epigraph has a kink.  Immutable after
    construction.
    """

    def __init__(self, grid, ls, is_quad, qa=None, qb=None, qc=None, pg=None, pv=None, pcnt=None):
        self.grid = grid
        self.ls = ls
        N, k = grid.n_pixels, ls.k
        self.is_quad = np.ascontiguousarray(is_quad, dtype=bool).reshape(N, k)
        self.qa = qa
        self.qb = qb
        self.qc = qc
        self.pg = pg
        self.pv = pv
        self.pcnt = pcnt
        if self.is_quad.any():
            for arr in (qa, qb, qc):
                if arr is None or arr.shape != (N, k):
                    raise ValueError("quadratic coefficient arrays must be (N, k)")
            if np.any(qa[self.is_quad] <= _AFFINE_EPS):
                raise ValueError("near-affine quadratics must be stored as polylines")
        if not self.is_quad.all():
            if pg is None or pv is None or pcnt is None:
                raise ValueError("polyline arrays missing")
            if pg.shape[:2] != (N, k) or pv.shape != pg.shape or pcnt.shape != (N, k):
                raise ValueError("polyline arrays must be (N, k, M) / (N, k)")

    @property
    def n_pixels(self):
        return self.grid.n_pixels

    @property
    def k(self):
        return self.ls.k

    @classmethod
    def from_quadratic(cls, grid, ls, qa, qb, qc):
        """Volume of quadratic pieces from (N, k) coefficient arrays."""
        N, k = grid.n_pixels, ls.k
        qa = np.ascontiguousarray(qa, dtype=np.float64).reshape(N, k)
        qb = np.ascontiguousarray(qb, dtype=np.float64).reshape(N, k)
        qc = np.ascontiguousarray(qc, dtype=np.float64).reshape(N, k)
        if np.any(qa < 0):
            raise ValueError("quadratic pieces must be convex (a >= 0)")
        if not all(np.all(np.isfinite(x)) for x in (qa, qb, qc)):
            raise ValueError("coefficients must be finite")
        is_quad = qa > _AFFINE_EPS
        pg = pv = pcnt = None
        if not is_quad.all():
            # affine entries become two-vertex polylines on their interval
            glo = np.broadcast_to(ls.gammas[:-1], (N, k))
            ghi = np.broadcast_to(ls.gammas[1:], (N, k))
            pg = np.stack([glo, ghi], axis=-1).astype(np.float64)
            vlo = qa * glo * glo + qb * glo + qc
            vhi = qa * ghi * ghi + qb * ghi + qc
            pv = np.stack([vlo, vhi], axis=-1)
            pcnt = np.full((N, k), 2, dtype=np.int64)
        return cls(grid, ls, is_quad, qa, qb, qc, pg, pv, pcnt)

    @classmethod
    def from_polylines(cls, grid, ls, pieces):
        """Volume from an (N, k) nested sequence of PolyLine pieces."""
        N, k = grid.n_pixels, ls.k
        flat = [pieces[p][i] for p in range(N) for i in range(k)]
        if len(flat) != N * k:
            raise ValueError("need one piece per (pixel, interval)")
        G, R, cnt = _pad_polylines(flat)
        M = G.shape[1]
        return cls(
            grid,
            ls,
            np.zeros((N, k), dtype=bool),
            pg=G.reshape(N, k, M),
            pv=R.reshape(N, k, M),
            pcnt=cnt.reshape(N, k),
        )

    @classmethod
    def from_pieces(cls, grid, ls, pieces):
        """Volume from an (N, k) nested sequence of mixed ConvexPiece values."""
        N, k = grid.n_pixels, ls.k
        qa = np.zeros((N, k))
        qb = np.zeros((N, k))
        qc = np.zeros((N, k))
        is_quad = np.zeros((N, k), dtype=bool)
        polys = []
        for p in range(N):
            for i in range(k):
                piece = pieces[p][i]
                lo, hi = ls.gammas[i], ls.gammas[i + 1]
                if not (np.isclose(piece.lo, lo) and np.isclose(piece.hi, hi)):
                    raise ValueError(f"piece ({p},{i}) does not cover its interval")
                if isinstance(piece, Quadratic) and piece.a > _AFFINE_EPS:
                    is_quad[p, i] = True
                    qa[p, i], qb[p, i], qc[p, i] = piece.a, piece.b, piece.c
                    polys.append(PolyLine(np.array([lo, hi]), np.array([0.0, 1.0])))
                elif isinstance(piece, Quadratic):
                    vv = piece_eval(piece, np.array([lo, hi]))
                    polys.append(PolyLine(np.array([lo, hi]), vv))
                else:
                    polys.append(piece)
        G, R, cnt = _pad_polylines(polys)
        M = G.shape[1]
        return cls(
            grid, ls, is_quad, qa, qb, qc,
            G.reshape(N, k, M), R.reshape(N, k, M), cnt.reshape(N, k),
        )

    def piece(self, pixel, interval):
        """Reconstruct the ConvexPiece at (pixel, 0-based interval)."""
        lo = float(self.ls.gammas[interval])
        hi = float(self.ls.gammas[interval + 1])
        if self.is_quad[pixel, interval]:
            return Quadratic(
                float(self.qa[pixel, interval]),
                float(self.qb[pixel, interval]),
                float(self.qc[pixel, interval]),
                lo,
                hi,
            )
        m = int(self.pcnt[pixel, interval])
        return PolyLine(self.pg[pixel, interval, :m].copy(), self.pv[pixel, interval, :m].copy())

    def pixel_pieces(self, pixel):
        return [self.piece(pixel, i) for i in range(self.k)]

    def eval_cost(self, gammas):
        """Convexified cost per pixel at per-pixel positions (N,)."""
        g = np.clip(np.asarray(gammas, dtype=np.float64), self.ls.lo, self.ls.hi)
        idx = np.clip(np.searchsorted(self.ls.gammas, g, side="left") - 1, 0, self.k - 1)
        rows = np.arange(self.n_pixels)
        out = np.empty(self.n_pixels)
        quad = self.is_quad[rows, idx]
        if quad.any():
            a = self.qa[rows, idx][quad]
            b = self.qb[rows, idx][quad]
            c = self.qc[rows, idx][quad]
            gg = g[quad]
            out[quad] = a * gg * gg + b * gg + c
        poly = ~quad
        if poly.any():
            pr = rows[poly]
            pi = idx[poly]
            gg = g[poly]
            G = self.pg[pr, pi]  # (n, M) padded; padding repeats last vertex
            V = self.pv[pr, pi]
            j = np.clip(np.sum(G <= gg[:, None], axis=1) - 1, 0, self.pcnt[pr, pi] - 2)
            rr = np.arange(gg.size)
            g0, g1 = G[rr, j], G[rr, j + 1]
            v0, v1 = V[rr, j], V[rr, j + 1]
            w = np.where(g1 > g0, (gg - g0) / np.maximum(g1 - g0, 1e-300), 0.0)
            out[poly] = v0 + w * (v1 - v0)
        return out

    def epigraph_projector(self, dtype_check=True):
        """Build the joint (v_i, z_i) projector used inside the solver.

        Returns a function mapping flattened (N*k,) arrays (v, z) to their
        projection onto the scaled conjugate epigraphs
        {(v, z): z / h_i >= conj_i(v / h_i)} -- the scaling commutes with
        the euclidean projection, so pairs are divided by h_i, projected
        onto epi(conj_i), and scaled back.
        """
        N, k = self.n_pixels, self.k
        h = np.broadcast_to(self.ls.widths, (N, k)).reshape(-1)
        flags = self.is_quad.reshape(-1)
        qidx = np.flatnonzero(flags)
        pidx = np.flatnonzero(~flags)
        all_quad = pidx.size == 0
        all_poly = qidx.size == 0
        glo = np.broadcast_to(self.ls.gammas[:-1], (N, k)).reshape(-1)
        ghi = np.broadcast_to(self.ls.gammas[1:], (N, k)).reshape(-1)
        if qidx.size:
            sel = slice(None) if all_quad else qidx
            qa = np.ascontiguousarray(self.qa.reshape(-1)[sel])
            qb = np.ascontiguousarray(self.qb.reshape(-1)[sel])
            qc = np.ascontiguousarray(self.qc.reshape(-1)[sel])
            qlo = np.ascontiguousarray(glo[sel])
            qhi = np.ascontiguousarray(ghi[sel])
        if pidx.size:
            sel = slice(None) if all_poly else pidx
            M = self.pg.shape[2]
            G = np.ascontiguousarray(self.pg.reshape(-1, M)[sel])
            R = np.ascontiguousarray(self.pv.reshape(-1, M)[sel])
            cnt = np.ascontiguousarray(self.pcnt.reshape(-1)[sel])

        def project(v, z):
            t = v / h
            w = z / h
            if all_quad:
                t, w = _kernels.quad_conj_epi_project(t, w, qa, qb, qc, qlo, qhi)
            elif all_poly:
                t, w = _kernels.polyline_conj_epi_project(t, w, G, R, cnt)
            else:
                tq, wq = _kernels.quad_conj_epi_project(
                    np.ascontiguousarray(t[qidx]), np.ascontiguousarray(w[qidx]),
                    qa, qb, qc, qlo, qhi,
                )
                tp, wp = _kernels.polyline_conj_epi_project(
                    np.ascontiguousarray(t[pidx]), np.ascontiguousarray(w[pidx]), G, R, cnt
                )
                t[qidx] = tq
                w[qidx] = wq
                t[pidx] = tp
                w[pidx] = wp
            return t * h, w * h

        return project


class BaselineCosts:
    """Per-pixel costs at the labels themselves, for the baseline lifting.

    The baseline dataterm is rho(gamma_1) + <u, r> on the monotone box with
    r_i = rho(gamma_{i+1}) - rho(gamma_i) (linear between labels).
    """

    def __init__(self, grid, ls, costs):
        costs = np.ascontiguousarray(costs, dtype=np.float64)
        if costs.shape != (grid.n_pixels, ls.L):
            raise ValueError("costs must have shape (n_pixels, L)")
        if not np.all(np.isfinite(costs)):
            raise ValueError("costs must be finite")
        self.grid = grid
        self.ls = ls
        self.costs = costs

    @classmethod
    def from_cost_fn(cls, grid, ls, cost_fn):
        costs = np.empty((grid.n_pixels, ls.L))
        for l, g in enumerate(ls.gammas):
            costs[:, l] = cost_fn(float(g))
        return cls(grid, ls, costs)

    @property
    def r(self):
        """Label-to-label cost increments, shape (n_pixels, k)."""
        return np.diff(self.costs, axis=1)

    def interp(self, gammas):
        """Linear interpolation of the label costs at per-pixel positions."""
        g = np.asarray(gammas, dtype=np.float64)
        if g.ndim == 0:
            g = np.full(self.grid.n_pixels, float(g))
        gl = self.ls.gammas
        idx = np.clip(np.searchsorted(gl, g, side="right") - 1, 0, self.ls.k - 1)
        w = (np.clip(g, gl[0], gl[-1]) - gl[idx]) / (gl[idx + 1] - gl[idx])
        rows = np.arange(self.grid.n_pixels)
        return (1.0 - w) * self.costs[rows, idx] + w * self.costs[rows, idx + 1]


def baseline_r(bc):
    """r_i = rho(gamma_{i+1}) - rho(gamma_i) per pixel."""
    return bc.r


def sample_costs(cost_fn, grid, ls, samples_per_interval=8):
    """Sample a cost callback and convexify each interval.

    cost_fn(gamma) must return the (n_pixels,) cost of assigning the scalar
    gamma at every pixel.  Each interval gets samples_per_interval + 1
    equispaced samples (endpoints included) whose lower hull becomes the
    piece.
    """
    S = int(samples_per_interval)
    if S < 2:
        raise ValueError("need at least 2 sublabel samples per interval")
    N, k = grid.n_pixels, ls.k
    g = ls.gammas
    xs = np.empty((N * k, S + 1))
    ys = np.empty((N * k, S + 1))
    for i in range(k):
        pts = np.linspace(g[i], g[i + 1], S + 1)
        for j, gamma in enumerate(pts):
            c = np.asarray(cost_fn(float(gamma)), dtype=np.float64).reshape(-1)
            if c.size != N:
                raise ValueError("cost callback must return one value per pixel")
            if not np.all(np.isfinite(c)):
                raise ValueError("cost callback produced non-finite values")
            idx = np.arange(N) * k + i
            xs[idx, j] = gamma
            ys[idx, j] = c
    cnt = np.full(N * k, S + 1, dtype=np.int64)
    hx, hy, hn = _kernels.lower_hull_batch(xs, ys, cnt)
    M = hx.shape[1]
    return DatatermVolume(
        grid,
        ls,
        np.zeros((N, k), dtype=bool),
        pg=hx.reshape(N, k, M),
        pv=hy.reshape(N, k, M),
        pcnt=hn.reshape(N, k),
    )


class CostVolume:
    """Sampled per-pixel costs over a uniform grid of range positions."""

    def __init__(self, grid, gamma_lo, gamma_hi, costs):
        costs = np.ascontiguousarray(costs, dtype=np.float64)
        if costs.ndim != 2 or costs.shape[0] != grid.n_pixels:
            raise ValueError("costs must have shape (n_pixels, n_samples)")
        if costs.shape[1] < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.isfinite(costs)):
            raise ValueError("costs must be finite")
        if not gamma_lo < gamma_hi:
            raise ValueError("gamma bounds must be ordered")
        self.grid = grid
        self.gamma_lo = float(gamma_lo)
        self.gamma_hi = float(gamma_hi)
        self.costs = costs

    @property
    def n_samples(self):
        return self.costs.shape[1]

    @property
    def gammas(self):
        return np.linspace(self.gamma_lo, self.gamma_hi, self.n_samples)

    def interp(self, gammas):
        """Per-pixel linear interpolation of the sampled costs."""
        g = np.asarray(gammas, dtype=np.float64)
        if g.ndim == 0:
            g = np.full(self.grid.n_pixels, float(g))
        pos = (np.clip(g, self.gamma_lo, self.gamma_hi) - self.gamma_lo) / (
            (self.gamma_hi - self.gamma_lo) / (self.n_samples - 1)
        )
        j = np.clip(pos.astype(np.int64), 0, self.n_samples - 2)
        w = pos - j
        rows = np.arange(self.grid.n_pixels)
        return (1.0 - w) * self.costs[rows, j] + w * self.costs[rows, j + 1]

    def cost_fn(self):
        return lambda gamma: self.interp(gamma)


def volume_to_dataterm(vol, ls):
    """Convexify a sampled cost volume on each label interval.

    Per (pixel, interval) the samples falling inside the interval plus the
    linearly interpolated endpoint values are hulled.  Labels need not align
    with the sample grid.
    """
    if ls.lo < vol.gamma_lo - 1e-12 or ls.hi > vol.gamma_hi + 1e-12:
        raise ValueError("label range exceeds volume range")
    N, k = vol.grid.n_pixels, ls.k
    sg = vol.gammas
    xs_list = []
    max_m = 0
    for i in range(k):
        lo, hi = ls.gammas[i], ls.gammas[i + 1]
        inner = sg[(sg > lo + 1e-12) & (sg < hi - 1e-12)]
        pts = np.concatenate([[lo], inner, [hi]])
        xs_list.append(pts)
        max_m = max(max_m, pts.size)
    xs = np.empty((N * k, max_m))
    ys = np.empty((N * k, max_m))
    cnt = np.empty(N * k, dtype=np.int64)
    for i in range(k):
        pts = xs_list[i]
        m = pts.size
        idx = np.arange(N) * k + i
        cnt[idx] = m
        for j, gamma in enumerate(pts):
            xs[idx, j] = gamma
            ys[idx, j] = vol.interp(gamma)
        if m < max_m:
            xs[idx[:, None], np.arange(m, max_m)] = pts[-1]
            ys[idx[:, None], np.arange(m, max_m)] = ys[idx, m - 1][:, None]
    hx, hy, hn = _kernels.lower_hull_batch(xs, ys, cnt)
    M = hx.shape[1]
    return DatatermVolume(
        vol.grid,
        ls,
        np.zeros((N, k), dtype=bool),
        pg=hx.reshape(N, k, M),
        pv=hy.reshape(N, k, M),
        pcnt=hn.reshape(N, k),
    )


def volume_to_baseline(vol, ls):
    """Baseline label costs read off a sampled volume (linear interp)."""
    costs = np.empty((vol.grid.n_pixels, ls.L))
    for l, g in enumerate(ls.gammas):
        costs[:, l] = vol.interp(float(g))
    return BaselineCosts(vol.grid, ls, costs)
