"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
summaries.  Everything is deterministic and CPU-only; the heavy shared
solves live in module-scoped fixtures.
"""

import numpy as np
import pytest

import sublift as sl
from sublift.dataterm import (
    BaselineCosts,
    DatatermVolume,
    PolyLine,
    convexify_interval,
    volume_to_dataterm,
)
from sublift.labels import GridShape, LabelSpace, ScalarField, unlift_field
from sublift.oracles import (
    check_jump_constraint_reduction,
    check_affine_lifting_form,
    check_binary_reduction,
    solve_rof_direct,
    witness_violations,
)
from sublift.problems import (
    build_rof,
    build_stereo_cost,
    build_trunc_quad,
    build_unwrap,
    rof_cost_fn,
    trunc_quad_cost_fn,
    unwrap_cost_fn,
)
from sublift.projections import (
    proj_ball_l2,
    proj_monotone_box,
    proj_parabola_epigraph,
    proj_polyline_conjugate_epigraph,
)
from sublift.solver import (
    SolverConfig,
    _grad_arrays,
    baseline_lifted_energy,
    div,
    energy_unlifted,
    grad,
    solve_baseline,
    solve_sublabel,
    variable_count,
)
from sublift import fileio, synthetic

LAM_ROF = 0.25


def _report(num, text):
    print(f"PASS criterion {num}: {text}")


@pytest.fixture(scope="module")
def rof_setup():
    """Direct-solver optimum and method energies on the 64x64 test image."""
    img = synthetic.piecewise_smooth_image(64, 64)
    f = ScalarField.from_image(img)
    cost = rof_cost_fn(f)
    direct = solve_rof_direct(f, LAM_ROF, iters=30000)
    g = _grad_arrays(direct.values.reshape(-1, 1), f.grid)[:, 0, :]
    e_star = float(
        np.sum((direct.values - f.values) ** 2)
        + LAM_ROF * np.sum(np.sqrt(np.sum(g * g, axis=1)))
    )
    energies = {}
    for L, iters in ((2, 8000), (4, 12000), (8, 20000)):
        ls = LabelSpace.uniform(0, 1, L)
        dt = build_rof(f, ls)
        cfg = SolverConfig(
            lam=LAM_ROF, max_iters=iters, stop_tol=1e-9, check_every=1000, balance=0.05
        )
        lf, _ = solve_sublabel(dt, cfg, cost_fn=cost)
        energies[("sublabel", L)] = energy_unlifted(cost, ls, lf, LAM_ROF, "iso")
    ls8 = LabelSpace.uniform(0, 1, 8)
    bc = BaselineCosts.from_cost_fn(f.grid, ls8, cost)
    cfg = SolverConfig(lam=LAM_ROF, max_iters=12000, stop_tol=1e-9, check_every=1000)
    lfb, _ = solve_baseline(bc, cfg, cost_fn=cost)
    energies[("baseline", 8)] = energy_unlifted(cost, ls8, lfb, LAM_ROF, "iso")
    return f, e_star, energies


def test_criterion_01_rof_tightness(rof_setup):
    _, e_star, energies = rof_setup
    gaps = {}
    for L in (2, 4, 8):
        gap = (energies[("sublabel", L)] - e_star) / e_star
        gaps[L] = gap
        assert gap <= 1e-3, f"sublabel L={L} gap {gap:.2e} exceeds 0.1%"
    base_gap = (energies[("baseline", 8)] - e_star) / e_star
    assert base_gap >= 1e-2, f"baseline L=8 gap {base_gap:.2e} below 1%"
    _report(
        1,
        "sublabel L=2/4/8 gaps "
        + " ".join(f"{gaps[L]:.1e}" for L in (2, 4, 8))
        + f" all <= 1e-3; baseline L=8 gap {base_gap:.1%} >= 1%",
    )


def test_criterion_02_two_pixel_closed_form():
    grid = GridShape(2, 1)
    f = ScalarField(grid, np.array([0.0, 1.0]))
    ls = LabelSpace(np.array([0.0, 1.0]))
    cfg = SolverConfig(lam=2.0, max_iters=6000, stop_tol=1e-12)
    lf, _ = solve_sublabel(build_rof(f, ls), cfg, cost_fn=rof_cost_fn(f))
    sub = unlift_field(ls, lf).values
    # closed-form pooling: the difference shrinks to max(0, 1 - lam) = 0,
    # so both pixels sit at the mean 0.5
    np.testing.assert_allclose(sub, [0.5, 0.5], atol=1e-3)
    direct = solve_rof_direct(f, 2.0, iters=6000).values
    np.testing.assert_allclose(direct, [0.5, 0.5], atol=1e-3)
    _report(2, f"two-pixel pooling: sublabel {sub.round(5)}, direct {direct.round(5)}")


def test_criterion_03_affine_equivalence():
    rng = np.random.default_rng(7)
    grid = GridShape(16, 16)
    ls = LabelSpace.uniform(0, 1, 3)
    lam = 0.2
    worst_rel = 0.0
    for _ in range(5):
        costs = rng.uniform(0, 1, size=(256, ls.L))
        bc = BaselineCosts(grid, ls, costs)
        pieces = [
            [
                PolyLine(ls.gammas[i : i + 2].copy(), costs[p, i : i + 2].copy())
                for i in range(ls.k)
            ]
            for p in range(256)
        ]
        dt = DatatermVolume.from_polylines(grid, ls, pieces)
        cfg = SolverConfig(lam=lam, max_iters=20000, stop_tol=1e-12, check_every=250)
        lfb, _ = solve_baseline(bc, cfg)
        lfs, _ = solve_sublabel(dt, cfg)
        eb = baseline_lifted_energy(bc, proj_monotone_box(lfb.values), lam, "iso")
        es = baseline_lifted_energy(bc, proj_monotone_box(lfs.values), lam, "iso")
        worst_rel = max(worst_rel, abs(eb - es) / abs(eb))
    assert worst_rel <= 1e-6
    rep = check_affine_lifting_form(LabelSpace(np.array([0.0, 1.0, 2.0])), np.array([0.0, 1.0, 4.0]), trials=100, rng=0)
    assert rep.passed and rep.worst <= rep.tolerance
    _report(
        3,
        f"affine-piece energies agree to {worst_rel:.1e} (<=1e-6) on 5 instances; "
        f"envelope deviation {rep.worst:.2e} <= 2*grid-step {rep.tolerance:.2e}",
    )


def test_criterion_04_binary_case():
    ls = LabelSpace(np.array([0.0, 1.0]))
    xs = np.linspace(0.0, 1.0, 101)
    cases = {
        "convex": sl.quadratic_piece(1.0, -0.6, 0.09, 0.0, 1.0),
        "two-minima": convexify_interval(
            xs, np.minimum((xs - 0.25) ** 2, (xs - 0.8) ** 2 + 0.02)
        ),
        "affine": PolyLine(np.array([0.0, 1.0]), np.array([0.1, 2.1])),
    }
    worst = {}
    for name, piece in cases.items():
        rep = check_binary_reduction(ls, piece, trials=100, rng=0)
        assert rep.passed, f"{name}: {rep}"
        worst[name] = rep.worst
    _report(4, "binary-case deviations " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_criterion_05_constraint_reduction():
    ls = LabelSpace(np.array([0.0, 0.6, 1.4, 2.0]))
    rng = np.random.default_rng(11)
    rep = check_jump_constraint_reduction(rng.normal(size=(3, 2)) * 3.0, ls, trials=100_000, rng=1)
    assert rep.passed and rep.worst <= 1e-10
    # the deterministic witness (alpha=1, beta=0, i=j) detects every
    # injected row violation
    from sublift.projections import proj_K

    P = proj_K(rng.normal(size=(3, 2)), ls)
    detected = 0
    for i in range(ls.k):
        bad = P.copy()
        row = bad[i] if np.linalg.norm(bad[i]) > 0 else np.ones(2)
        bad[i] = row / np.linalg.norm(row) * ls.widths[i] * 1.01
        if witness_violations(bad, ls)[i] > 0:
            detected += 1
    assert detected == ls.k
    _report(
        5,
        f"10^5 sampled jump constraints hold after projection (worst margin "
        f"{rep.worst:.1e} <= 1e-10); witness detected {detected}/{ls.k} injected rows",
    )


def test_criterion_06_projection_suite():
    rng = np.random.default_rng(13)
    n = 10_000
    checked = []

    def battery(name, project, feasible, dim):
        X = rng.normal(scale=2.0, size=(n, dim))
        Y = rng.normal(scale=2.0, size=(n, dim))
        PX, PY = project(X), project(Y)
        idem = np.max(np.abs(project(PX) - PX))
        assert idem <= 1e-12, name
        feas = feasible(PX)
        assert feas <= 1e-10, name
        nonexp = np.max(
            np.linalg.norm(PX - PY, axis=1) - np.linalg.norm(X - Y, axis=1)
        )
        assert nonexp <= 1e-9, name
        C = project(rng.normal(scale=1.5, size=(n, dim)))
        vari = np.max(np.sum((X - PX) * (C - PX), axis=1))
        assert vari <= 1e-8, name
        checked.append(name)

    battery(
        "ball_l2",
        lambda x: proj_ball_l2(x, 1.2),
        lambda p: max(0.0, float(np.max(np.linalg.norm(p, axis=1)) - 1.2)),
        3,
    )
    battery(
        "ball_linf",
        lambda x: np.clip(x, -0.8, 0.8),
        lambda p: max(0.0, float(np.max(np.abs(p)) - 0.8)),
        3,
    )
    battery(
        "monotone_box",
        proj_monotone_box,
        lambda p: max(
            0.0,
            float(np.max(np.diff(p, axis=1), initial=0.0)),
            float(np.max(p) - 1.0),
            float(-np.min(p)),
        ),
        4,
    )
    battery(
        "parabola_epi",
        lambda x: proj_parabola_epigraph(x, 0.7),
        lambda p: max(0.0, float(np.max(0.7 * p[:, 0] ** 2 - p[:, 1]))),
        2,
    )
    piece = PolyLine(np.array([-0.5, 0.2, 1.0]), np.array([0.3, -0.1, 0.4]))
    battery(
        "polyline_conj_epi",
        lambda x: proj_polyline_conjugate_epigraph(x, piece),
        lambda p: max(
            0.0,
            float(
                np.max(
                    np.max(p[:, :1] * piece.gammas - piece.values, axis=1) - p[:, 1]
                )
            ),
        ),
        2,
    )
    # parabola projection against a dense search over boundary points
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.2, 3.0)
        pt = rng.uniform(-3, 3, size=2)
        got = proj_parabola_epigraph(pt, a)
        if pt[1] >= a * pt[0] ** 2:
            continue
        xs = np.linspace(-abs(pt[0]) - 3, abs(pt[0]) + 3, 400001)
        d2 = (xs - pt[0]) ** 2 + (a * xs * xs - pt[1]) ** 2
        xb = xs[np.argmin(d2)]
        worst = max(worst, float(np.max(np.abs(got - [xb, a * xb * xb]))))
    assert worst <= 1e-3
    _report(
        6,
        f"projection battery ({', '.join(checked)}) on 10^4 inputs; "
        f"parabola dense-search deviation {worst:.1e} <= 1e-3",
    )


def test_criterion_07_operator_adjointness():
    rng = np.random.default_rng(17)
    grid = GridShape(32, 32)
    worst = 0.0
    for _ in range(5):
        u = rng.normal(size=(grid.n_pixels, 4))
        p = rng.normal(size=(grid.n_pixels, 4, 2))
        from sublift.labels import LiftedField

        lhs = float(np.sum(grad(LiftedField(grid, u)) * p))
        rhs = float(np.sum(u * div(p, grid)))
        worst = max(worst, abs(lhs + rhs) / max(1.0, abs(lhs)))
    assert worst <= 1e-10
    _report(7, f"<grad u, p> + <u, div p> = 0 to {worst:.1e} on random 32x32 k=4 fields")


def test_criterion_08_robust_denoising():
    rng = np.random.default_rng(42)
    clean = synthetic.piecewise_smooth_image(64, 64)
    noisy = synthetic.add_noise(clean, rng, gauss_sigma=0.05, salt_pepper=0.05)
    f = ScalarField.from_image(noisy)
    alpha, nu, lam = 25.0, 0.025, 1.0
    cost = trunc_quad_cost_fn(f, alpha, nu)
    ls4 = LabelSpace.uniform(0, 1, 4)
    cfg = SolverConfig(lam=lam, max_iters=8000, stop_tol=1e-8)
    lfs, _ = solve_sublabel(build_trunc_quad(f, alpha, nu, ls4), cfg, cost_fn=cost)
    e_sub = energy_unlifted(cost, ls4, lfs, lam, "iso")
    ls16 = LabelSpace.uniform(0, 1, 16)
    bc = BaselineCosts.from_cost_fn(f.grid, ls16, cost)
    lfb, _ = solve_baseline(bc, cfg, cost_fn=cost)
    e_base = energy_unlifted(cost, ls16, lfb, lam, "iso")
    assert e_sub <= e_base
    _report(8, f"robust denoising: sublabel L=4 energy {e_sub:.3f} <= baseline L=16 {e_base:.3f}")


def test_criterion_09_phase_unwrapping():
    ramp = synthetic.phase_ramp(32, 32)
    f = ScalarField.from_image(synthetic.wrap_phase(ramp))
    ls = LabelSpace.uniform(0, 4 * np.pi, 8)
    lam = 0.005
    cost = unwrap_cost_fn(f)
    cfg = SolverConfig(lam=lam, max_iters=8000, stop_tol=1e-9)
    lfs, _ = solve_sublabel(build_unwrap(f, ls), cfg, cost_fn=cost)
    rec = unlift_field(ls, lfs).to_image()
    mse_sub = float(np.mean((rec[2:-2, 2:-2] - ramp[2:-2, 2:-2]) ** 2))
    bc = BaselineCosts.from_cost_fn(f.grid, ls, cost)
    lfb, _ = solve_baseline(bc, cfg, cost_fn=cost)
    recb = unlift_field(ls, lfb).to_image()
    mse_base = float(np.mean((recb[2:-2, 2:-2] - ramp[2:-2, 2:-2]) ** 2))
    assert mse_sub < mse_base
    assert mse_sub < 0.05
    _report(
        9,
        f"unwrapping MSE: sublabel {mse_sub:.2e} rad^2 < 0.05 and < baseline {mse_base:.2e}",
    )


def test_criterion_10_stereo_smoke():
    left, right = synthetic.stereo_pair(48, 40, shift=3)
    vol = build_stereo_cost(left, right, np.arange(7.0))
    ls = LabelSpace.uniform(0, 6, 2)
    dt = volume_to_dataterm(vol, ls)
    cfg = SolverConfig(lam=0.05, max_iters=4000, stop_tol=1e-9)
    lf, _ = solve_sublabel(dt, cfg, cost_fn=vol.cost_fn())
    disp = unlift_field(ls, lf).to_image()
    med = float(np.median(disp[4:-4, 8:-8]))
    assert abs(med - 3.0) <= 0.5
    _report(10, f"stereo L=2 interior median disparity {med:.3f} within 3 +/- 0.5")


def test_criterion_11_variable_accounting():
    cases = [
        (GridShape(1, 1), 2, 4, 7),
        (GridShape(10, 10), 9, 3200, 4900),
        (GridShape(64, 64), 8, 4 * 4096 * 7, 6 * 4096 * 7 + 4096),
    ]
    for grid, L, base, sub in cases:
        ls = LabelSpace.uniform(0, 1, L)
        assert variable_count(grid, ls, "baseline") == base == 4 * grid.n_pixels * (L - 1)
        assert variable_count(grid, ls, "sublabel") == sub == 6 * grid.n_pixels * (L - 1) + grid.n_pixels
    _report(11, "variable counts reproduce 4N(L-1) and 6N(L-1)+N exactly")


def test_criterion_12_cli_determinism(tmp_path):
    rng = np.random.default_rng(3)
    img = np.clip(
        synthetic.piecewise_smooth_image(16, 12) + rng.normal(0, 0.05, (12, 16)), 0, 1
    )
    src = tmp_path / "in.pgm"
    fileio.write_pgm(src, img)
    from sublift.cli import main

    outs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        code = main(
            ["rof", "--input", str(src), "--output", str(out), "--labels", "4",
             "--max-iters", "600"]
        )
        assert code == 0
        outs.append(out)
    files = ("result.pfm", "preview.pgm", "energy.csv", "summary.txt")
    for fname in files:
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    _report(12, f"repeated CLI runs byte-identical across {', '.join(files)}")
