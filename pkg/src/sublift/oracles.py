"""Brute-force references for every closed form used elsewhere.

Nothing here shares code with the fast paths it validates: conjugates are
dense-grid suprema, lifted envelopes are grid searches over the dual
vector, and the constraint-set reduction is checked by sampling the
original infinite constraint family.  The checks are also callable from the
command line (``sublift verify``).
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .dataterm import PolyLine, Quadratic, conjugate_eval, convexify_interval, piece_eval
from .labels import LabelSpace, ScalarField
from .projections import RegularizerKind, proj_K


@dataclass(frozen=True)
class SampledFunction:
    """Dense uniform samples (gamma, value) of a cost on the range."""

    gammas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if g.size == 0 or g.size != v.size:
            raise ValueError("need matching nonempty sample arrays")
        if g.size > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("sample positions must be ascending")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, fn, lo, hi, step):
        n = int(round((hi - lo) / step)) + 1
        g = np.linspace(lo, hi, n)
        return cls(g, np.asarray([fn(x) for x in g], dtype=np.float64))


def brute_conjugate(sf, t):
    """max over samples of t*gamma - value; O(h) low for Lipschitz costs."""
    return float(np.max(t * sf.gammas - sf.values))


def _piece_slope_range(piece):
    if isinstance(piece, Quadratic):
        return 2 * piece.a * piece.lo + piece.b, 2 * piece.a * piece.hi + piece.b
    slopes = np.diff(piece.values) / np.diff(piece.gammas)
    return float(slopes.min()), float(slopes.max())


class LiftedEnvelopeGrid:
    """Grid search machinery for the biconjugate of the lifted dataterm.

    Evaluates sup_v <u, v> - max_i conj_i(v) over a box of dual vectors.
    Per-axis bounds come from the piece's subgradient range (plus/minus one)
    scaled by the interval width, since the supremum activates piece
    subgradients.  Cost grows exponentially in k; only k <= 3 is supported.
    """

    def __init__(self, ls, pieces, resolution=401):
        if ls.k > 3:
            raise ValueError("brute-force envelope supports k <= 3 only")
        if len(pieces) != ls.k:
            raise ValueError("need one piece per interval")
        self.ls = ls
        self.k = ls.k
        g = ls.gammas
        h = ls.widths
        axes = []
        for i in range(self.k):
            smin, smax = _piece_slope_range(pieces[i])
            axes.append(np.linspace((smin - 1.0) * h[i], (smax + 1.0) * h[i], resolution))
        self.axes = axes
        self.step = max(float(ax[1] - ax[0]) for ax in axes)
        # g(v) = max_i [sum_{l<i} v_l - (gamma_i/h_i) v_i + conj_i(v_i/h_i)]
        shape = tuple(ax.size for ax in axes)
        gmax = np.full(shape, -np.inf)
        for i in range(self.k):
            conj_1d = conjugate_eval(pieces[i], axes[i] / h[i])
            term = -(g[i] / h[i]) * axes[i] + conj_1d
            expand = [None] * self.k
            expand[i] = slice(None)
            total = term[tuple(expand)]
            for l in range(i):
                el = [None] * self.k
                el[l] = slice(None)
                total = total + self.axes[l][tuple(el)]
            gmax = np.maximum(gmax, np.broadcast_to(total, shape))
        self.gmax = gmax

    def envelope(self, u):
        u = np.asarray(u, dtype=np.float64)
        lin = np.zeros(self.gmax.shape)
        for l in range(self.k):
            el = [None] * self.k
            el[l] = slice(None)
            lin = lin + u[l] * self.axes[l][tuple(el)]
        return float(np.max(lin - self.gmax))


def brute_lifted_envelope(ls, pieces, u, resolution=401):
    """Grid-search lower bound on the lifted dataterm's biconjugate at u."""
    return LiftedEnvelopeGrid(ls, pieces, resolution).envelope(u)


def _random_feasible(rng, k):
    return np.sort(rng.uniform(0.0, 1.0, size=k))[::-1].copy()


@dataclass
class CheckReport:
    """Worst-case margins of one verification check."""

    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def row(self):
        return [self.name, "pass" if self.passed else "FAIL", f"{self.worst:.6e}", f"{self.tolerance:.6e}", self.detail]


def check_affine_lifting_form(ls, label_costs, trials=100, resolution=401, rng=None):
    """Envelope of affine pieces vs the explicit linear form on the box.

    label_costs: (L,) costs at the labels.  For random feasible u the grid
    envelope must match rho(gamma_1) + <u, r> within the grid tolerance
    2 * step * max(1, ||u||_1); the reported worst deviation uses the raw
    difference.
    """
    rng = np.random.default_rng(0 if rng is None else rng)
    costs = np.asarray(label_costs, dtype=np.float64)
    if costs.size != ls.L:
        raise ValueError("need one cost per label")
    pieces = [
        PolyLine(ls.gammas[i : i + 2].copy(), costs[i : i + 2].copy()) for i in range(ls.k)
    ]
    grid = LiftedEnvelopeGrid(ls, pieces, resolution)
    r = np.diff(costs)
    worst = 0.0
    worst_scaled = 0.0
    for _ in range(trials):
        u = _random_feasible(rng, ls.k)
        closed = float(costs[0] + u @ r)
        brute = grid.envelope(u)
        dev = abs(closed - brute)
        worst = max(worst, dev)
        worst_scaled = max(worst_scaled, dev / max(np.sum(np.abs(u)), 1e-12))
    tol = 2.0 * grid.step
    return CheckReport(
        "affine_lifting_linear_form",
        worst <= tol,
        worst,
        tol,
        f"trials={trials} step={grid.step:.3e} worst/|u|1={worst_scaled:.3e}",
    )


def check_binary_reduction(ls, piece, trials=100, resolution=401, rng=None):
    """Binary-label reduction: envelope equals the convex piece itself.

    Requires L = 2 and a piece that is its own convex envelope on the
    range; then the lifted biconjugate at u equals piece(gamma_1 + u * h).
    """
    rng = np.random.default_rng(0 if rng is None else rng)
    if ls.k != 1:
        raise ValueError("binary check needs L = 2")
    grid = LiftedEnvelopeGrid(ls, [piece], resolution)
    h = float(ls.widths[0])
    worst = 0.0
    for _ in range(trials):
        u = float(rng.uniform(0.0, 1.0))
        direct = float(piece_eval(piece, ls.lo + u * h))
        brute = grid.envelope(np.array([u]))
        worst = max(worst, abs(direct - brute))
    tol = 2.0 * grid.step
    return CheckReport("binary_reduction", worst <= tol, worst, tol, f"trials={trials}")


def sample_tv_constraints(P, ls, trials, rng=None, kind=RegularizerKind.ISOTROPIC):
    """Margins of the sampled jump constraints for a dual matrix P.

    Samples (j <= i, alpha, beta) and evaluates
    ||P^T (1_i^a - 1_j^b)|| <= |gamma_i^a - gamma_j^b| (l2 norm for
    isotropic TV, l-inf for anisotropic).  Returns lhs - rhs per sample
    (<= 0 means satisfied).
    """
    kind = RegularizerKind.parse(kind)
    rng = np.random.default_rng(0 if rng is None else rng)
    P = np.asarray(P, dtype=np.float64)
    k, d = P.shape
    g = ls.gammas
    ii = rng.integers(1, k + 1, size=trials)
    jj = rng.integers(1, k + 1, size=trials)
    lo = np.minimum(ii, jj)
    hi = np.maximum(ii, jj)
    alpha = rng.uniform(0.0, 1.0, size=trials)
    beta = rng.uniform(0.0, 1.0, size=trials)
    pref = np.zeros((k + 1, d))
    pref[1:] = np.cumsum(P, axis=0)
    # q^T(1_i^a - 1_j^b) = sum_{l=j}^{i-1} q_l + a q_i - b q_j  (1-based rows)
    vec = (pref[hi - 1] - pref[lo - 1]) + alpha[:, None] * P[hi - 1] - beta[:, None] * P[lo - 1]
    if kind is RegularizerKind.ISOTROPIC:
        lhs = np.sqrt(np.sum(vec * vec, axis=1))
    else:
        lhs = np.max(np.abs(vec), axis=1)
    gi = g[hi - 1] + alpha * (g[hi] - g[hi - 1])
    gj = g[lo - 1] + beta * (g[lo] - g[lo - 1])
    rhs = np.abs(gi - gj)
    return lhs - rhs


def witness_violations(P, ls, kind=RegularizerKind.ISOTROPIC):
    """Per-row margins of the deterministic witness (i = j, alpha=1, beta=0).

    Row i satisfies the bound iff ||P_i|| <= gamma_{i+1} - gamma_i, so a
    positive margin pinpoints the violating row.
    """
    kind = RegularizerKind.parse(kind)
    P = np.asarray(P, dtype=np.float64)
    if kind is RegularizerKind.ISOTROPIC:
        norms = np.sqrt(np.sum(P * P, axis=1))
    else:
        norms = np.max(np.abs(P), axis=1)
    return norms - ls.widths


def check_jump_constraint_reduction(P, ls, trials=10000, rng=None, kind=RegularizerKind.ISOTROPIC, tol=1e-10):
    """Rowwise norm bounds vs the sampled infinite constraint family.

    P is projected rowwise first; afterwards every sampled constraint must
    hold within tol, and scaling any row past its radius must trip the
    deterministic witness.
    """
    rng = np.random.default_rng(0 if rng is None else rng)
    Pp = proj_K(np.asarray(P, dtype=np.float64), ls, kind)
    margins = sample_tv_constraints(Pp, ls, trials, rng=rng, kind=kind)
    worst = float(np.max(margins))
    witness_ok = True
    for i in range(ls.k):
        bad = Pp.copy()
        direction = bad[i]
        if np.allclose(direction, 0.0):
            direction = np.ones(bad.shape[1])
        nrm = np.linalg.norm(direction) if kind is RegularizerKind.ISOTROPIC else np.max(np.abs(direction))
        bad[i] = direction / max(nrm, 1e-300) * ls.widths[i] * 1.01
        wm = witness_violations(bad, ls, kind)
        if not wm[i] > 0:
            witness_ok = False
    passed = worst <= tol and witness_ok
    return CheckReport(
        "tv_constraint_reduction",
        passed,
        worst,
        tol,
        f"trials={trials} witness={'ok' if witness_ok else 'FAIL'}",
    )


def check_conjugates(rng=None, cases=50, step=1e-3):
    """Closed-form piece conjugates against the dense-grid supremum.

    The grid sup is exact at the sample positions, so the deviation is
    bounded by step times the Lipschitz constant of t*g - piece(g); the
    reported worst margin is normalized by that bound (pass iff <= 1).
    """
    rng = np.random.default_rng(0 if rng is None else rng)
    worst = 0.0
    for _ in range(cases):
        lo = rng.uniform(-1.0, 0.5)
        hi = lo + rng.uniform(0.5, 2.0)
        if rng.uniform() < 0.5:
            piece = Quadratic(rng.uniform(0.0, 3.0), rng.uniform(-2, 2), rng.uniform(-1, 1), lo, hi)
        else:
            xs = np.linspace(lo, hi, 9)
            ys = rng.uniform(-1.0, 1.0, size=9)
            piece = convexify_interval(xs, ys)
        smin, smax = _piece_slope_range(piece)
        sf = SampledFunction.of(lambda x: float(piece_eval(piece, x)), lo, hi, step)
        for t in rng.uniform(-4.0, 4.0, size=8):
            lipschitz = abs(t) + max(abs(smin), abs(smax)) + 1.0
            dev = abs(float(conjugate_eval(piece, t)) - brute_conjugate(sf, t))
            worst = max(worst, dev / (step * lipschitz))
    return CheckReport(
        "piece_conjugates_vs_grid", worst <= 1.0, worst, 1.0, f"cases={cases} (step-normalized)"
    )


def run_all_checks(trials_k=10000, rng_seed=0):
    """The oracle battery behind ``sublift verify``."""
    rng = np.random.default_rng(rng_seed)
    reports = [check_conjugates(rng=rng_seed)]
    ls3 = LabelSpace(np.array([0.0, 1.0, 2.0]))
    reports.append(check_affine_lifting_form(ls3, ls3.gammas**2, trials=100, resolution=401, rng=rng_seed))
    ls2 = LabelSpace(np.array([0.0, 1.0]))
    convex = Quadratic(1.0, -0.6, 0.09, 0.0, 1.0)  # (g - 0.3)^2
    xs = np.linspace(0.0, 1.0, 101)
    twomin = np.minimum((xs - 0.25) ** 2, (xs - 0.8) ** 2 + 0.02)
    envelope = convexify_interval(xs, twomin)
    affine = PolyLine(np.array([0.0, 1.0]), np.array([0.1, 2.1]))
    for name, piece in (("convex", convex), ("two_minima", envelope), ("affine", affine)):
        rep = check_binary_reduction(ls2, piece, trials=100, rng=rng_seed)
        rep.name += f"_{name}"
        reports.append(rep)
    P = rng.normal(size=(3, 2)) * 2.0
    reports.append(
        check_jump_constraint_reduction(P, LabelSpace(np.array([0.0, 0.7, 1.5, 2.0])), trials=trials_k, rng=rng_seed)
    )
    return reports


def reports_to_text(reports):
    lines = []
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.name}: worst={r.worst:.3e} tol={r.tolerance:.3e} {r.detail}")
    return "\n".join(lines) + "\n"


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["check", "status", "worst_margin", "tolerance", "detail"])
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Direct (unlifted) reference solvers


def solve_rof_direct(f, lam, kind=RegularizerKind.ISOTROPIC, iters=20000, tol=0.0):
    """Reference primal-dual solve of min_u sum (u-f)^2 + lam * TV(u).

    Plain preconditioned first-order iteration on the scalar problem; used
    as the globally-optimal-energy oracle for the lifted methods.
    """
    from .solver import _grad_arrays, _div_arrays, _grad_counts

    kind = RegularizerKind.parse(kind)
    grid = f.grid
    H, W = grid.height, grid.width
    fv = f.values
    N = fv.size
    u = np.zeros(N)
    ubar = u.copy()
    p = np.zeros((N, 1, 2))
    sigma_p = _sigma_p(grid)
    gcnt = _grad_counts(grid)
    tau = 1.0 / np.maximum(gcnt, 1.0)
    for it in range(iters):
        gu = _grad_arrays(ubar.reshape(N, 1), grid)
        p += sigma_p[:, None, :] * gu
        if kind is RegularizerKind.ISOTROPIC:
            n = np.sqrt(np.sum(p * p, axis=2, keepdims=True))
            p *= np.where(n > lam, lam / np.maximum(n, 1e-300), 1.0)
        else:
            np.clip(p, -lam, lam, out=p)
        uprev = u
        grad_u = -_div_arrays(p, grid)[:, 0]
        # prox of tau * (u - f)^2: (u + 2 tau f) / (1 + 2 tau)
        u = (u - tau * grad_u + 2.0 * tau * fv) / (1.0 + 2.0 * tau)
        ubar = 2.0 * u - uprev
        if tol > 0 and it % 100 == 99 and np.max(np.abs(u - uprev)) < tol:
            break
    return ScalarField(grid, u)


def solve_convex_direct(pieces, grid, lam, kind=RegularizerKind.ISOTROPIC, iters=20000):
    """Direct solve of min_u sum rho_x(u(x)) + lam TV(u) for convex pieces.

    One ConvexPiece per pixel, each covering the whole range.  The dataterm
    prox is exact (closed form for quadratics, segment scan for polylines),
    making this an independent reference for the binary-label case.
    """
    from .solver import _grad_arrays, _div_arrays, _grad_counts
    from ._kernels import polyline_prox_batch
    from .dataterm import _pad_polylines

    kind = RegularizerKind.parse(kind)
    N = grid.n_pixels
    if len(pieces) != N:
        raise ValueError("need one piece per pixel")
    quad_mask = np.array([isinstance(p, Quadratic) for p in pieces])
    lo = np.array([p.lo for p in pieces])
    hi = np.array([p.hi for p in pieces])
    qa = np.array([p.a if isinstance(p, Quadratic) else 0.0 for p in pieces])
    qb = np.array([p.b if isinstance(p, Quadratic) else 0.0 for p in pieces])
    polys = [p for p in pieces if isinstance(p, PolyLine)]
    pidx = np.flatnonzero(~quad_mask)
    if polys:
        G, R, cnt = _pad_polylines(polys)
    u = lo.copy()
    ubar = u.copy()
    p = np.zeros((N, 1, 2))
    sigma_p = _sigma_p(grid)
    gcnt = _grad_counts(grid)
    tau = 1.0 / np.maximum(gcnt, 1.0)
    for _ in range(iters):
        gu = _grad_arrays(ubar.reshape(N, 1), grid)
        p += sigma_p[:, None, :] * gu
        if kind is RegularizerKind.ISOTROPIC:
            n = np.sqrt(np.sum(p * p, axis=2, keepdims=True))
            p *= np.where(n > lam, lam / np.maximum(n, 1e-300), 1.0)
        else:
            np.clip(p, -lam, lam, out=p)
        uprev = u.copy()
        x = u + tau * _div_arrays(p, grid)[:, 0]
        # exact prox of tau * piece
        unew = np.empty(N)
        if quad_mask.any():
            m = quad_mask
            unew[m] = np.clip(
                (x[m] - tau[m] * qb[m]) / (1.0 + 2.0 * tau[m] * qa[m]), lo[m], hi[m]
            )
        if pidx.size:
            unew[pidx] = polyline_prox_batch(
                np.ascontiguousarray(x[pidx]), np.ascontiguousarray(tau[pidx]), G, R, cnt
            )
        u = unew
        ubar = 2.0 * u - uprev
    return ScalarField(grid, u)


def _sigma_p(grid):
    """Dual step of the forward-difference rows: 1/2 where the row is live."""
    H, W = grid.height, grid.width
    s = np.full((H, W, 2), 1.0)
    if W > 1:
        s[:, : W - 1, 0] = 0.5
    if H > 1:
        s[: H - 1, :, 1] = 0.5
    return s.reshape(grid.n_pixels, 2)
