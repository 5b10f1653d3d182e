import numpy as np
import pytest

from sublift.dataterm import (
    BaselineCosts,
    CostVolume,
    DatatermVolume,
    PolyLine,
    Quadratic,
    baseline_r,
    conjugate_eval,
    convexify_interval,
    lifted_conjugate_eval,
    piece_eval,
    quadratic_piece,
    sample_costs,
    volume_to_baseline,
    volume_to_dataterm,
)
from sublift.labels import GridShape, LabelSpace


def brute_hull_keep(gammas, costs):
    """Oracle: keep a sample iff it lies on the pointwise max of all affine
    minorants of the sample set."""
    g = np.asarray(gammas, dtype=float)
    c = np.asarray(costs, dtype=float)
    n = g.size
    keep = []
    for m in range(n):
        on_support = False
        # try every affine function through pairs of samples (and the flat
        # function through the sample itself)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                slope = (c[j] - c[i]) / (g[j] - g[i])
                inter = c[i] - slope * g[i]
                vals = slope * g + inter
                if np.all(vals <= c + 1e-12) and abs(vals[m] - c[m]) < 1e-12:
                    on_support = True
        if on_support:
            keep.append(m)
    return keep


def test_convexify_trivial_cases():
    pl = convexify_interval([0, 0.5, 1], [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(pl.gammas, [0, 1])
    np.testing.assert_array_equal(pl.values, [0, 0])
    pl = convexify_interval([0, 0.5, 1], [0.0, -1.0, 0.0])
    assert pl.gammas.size == 3


def test_convexify_derived_case_against_oracle():
    g = [0.0, 0.25, 0.5, 0.75, 1.0]
    c = [1.0, 0.4, 0.3, 0.05, 0.3]
    keep = brute_hull_keep(g, c)
    assert keep == [0, 1, 3, 4]
    pl = convexify_interval(g, c)
    np.testing.assert_allclose(pl.gammas, [0.0, 0.25, 0.75, 1.0])
    np.testing.assert_allclose(pl.values, [1.0, 0.4, 0.05, 0.3])


def test_convexify_drops_collinear_and_validates():
    pl = convexify_interval([0, 0.5, 1], [0.0, 0.5, 1.0])
    assert pl.gammas.size == 2
    with pytest.raises(ValueError):
        convexify_interval([0.0], [1.0])
    with pytest.raises(ValueError):
        convexify_interval([0, 0], [1, 1])
    with pytest.raises(ValueError):
        convexify_interval([0, 1], [np.inf, 0.0])


def test_hull_lower_bounds_samples():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = rng.integers(2, 12)
        g = np.sort(rng.uniform(0, 1, size=n))
        g[0], g[-1] = 0.0, 1.0
        while np.any(np.diff(g) <= 0):
            g = np.sort(rng.uniform(0, 1, size=n))
            g[0], g[-1] = 0.0, 1.0
        c = rng.normal(size=n)
        pl = convexify_interval(g, c)
        assert np.all(piece_eval(pl, g) <= c + 1e-9)


def test_quadratic_piece_validation():
    q = quadratic_piece(1, 0, 0, 0, 1)
    assert isinstance(q, Quadratic)
    quadratic_piece(0, 2, 1, 0, 1)  # degenerate affine ok
    with pytest.raises(ValueError):
        quadratic_piece(-1, 0, 0, 0, 1)


def test_conjugate_quadratic_frozen_values():
    q = quadratic_piece(1, 0, 0, 0, 1)
    assert abs(conjugate_eval(q, 1.0) - 0.25) < 1e-12
    assert abs(conjugate_eval(q, 3.0) - 2.0) < 1e-12
    assert abs(conjugate_eval(q, -1.0) - 0.0) < 1e-12
    # closed form t^2/4 in the unclamped regime
    for t in (0.3, 0.9, 1.7):
        assert abs(conjugate_eval(q, t) - t * t / 4.0) < 1e-12


def test_conjugate_vs_dense_grid_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b, c = rng.uniform(0, 2), rng.uniform(-2, 2), rng.uniform(-1, 1)
        q = quadratic_piece(a, b, c, -0.5, 1.5)
        grid = np.arange(-0.5, 1.5 + 1e-9, 1e-3)
        vals = a * grid * grid + b * grid + c
        for t in rng.uniform(-4, 4, size=5):
            brute = np.max(t * grid - vals)
            assert abs(conjugate_eval(q, t) - brute) < 1e-3


def test_polyline_conjugate_is_vertex_max_and_convex():
    pl = PolyLine(np.array([0.0, 0.4, 1.0]), np.array([1.0, 0.2, 0.6]))
    rng = np.random.default_rng(5)
    for t in rng.uniform(-5, 5, size=50):
        expect = max(t * g - v for g, v in zip(pl.gammas, pl.values))
        assert abs(conjugate_eval(pl, t) - expect) < 1e-12
    # midpoint convexity on random triples
    for _ in range(200):
        t1, t2 = rng.uniform(-5, 5, size=2)
        mid = 0.5 * (t1 + t2)
        assert conjugate_eval(pl, mid) <= 0.5 * (
            conjugate_eval(pl, t1) + conjugate_eval(pl, t2)
        ) + 1e-12


def test_conjugate_invariance_under_convexification():
    # sampling a polyline on its own vertices and re-hulling preserves the
    # conjugate exactly
    pl = PolyLine(np.array([0.0, 0.3, 0.7, 1.0]), np.array([0.5, 0.1, 0.0, 0.4]))
    dense = np.sort(np.concatenate([pl.gammas, np.linspace(0, 1, 17)]))
    dense = np.unique(dense)
    pl2 = convexify_interval(dense, piece_eval(pl, dense))
    rng = np.random.default_rng(6)
    for t in rng.uniform(-4, 4, size=100):
        assert abs(conjugate_eval(pl, t) - conjugate_eval(pl2, t)) < 1e-9


def test_lifted_conjugate_examples():
    # k=1: reduces to the plain piece conjugate
    ls = LabelSpace(np.array([0.0, 1.0]))
    q = quadratic_piece(1, 0, 0, 0, 1)
    for t in (-1.0, 0.5, 2.0):
        assert abs(
            lifted_conjugate_eval(ls, [q], np.array([t]), 1) - conjugate_eval(q, t)
        ) < 1e-12
    # frozen example: piece g^2 on [1,2], v=0 -> -(min of g^2 on [1,2]) = -1
    ls2 = LabelSpace(np.array([0.0, 1.0, 2.0]))
    q2 = quadratic_piece(1, 0, 0, 1, 2)
    val = lifted_conjugate_eval(ls2, [None, q2], np.array([0.0, 0.0]), 2)
    assert abs(val - (-1.0)) < 1e-12
    with pytest.raises(ValueError):
        lifted_conjugate_eval(ls2, [None, q2], np.zeros(2), 3)


def test_lifted_conjugate_affine_vs_brute():
    # affine pieces: the supremum sits at an interval endpoint, so the
    # two-point sampled conjugate is exact
    from sublift.oracles import SampledFunction, brute_conjugate

    ls = LabelSpace(np.array([0.0, 0.8, 2.0]))
    rng = np.random.default_rng(7)
    costs = rng.normal(size=3)
    pieces = [
        PolyLine(ls.gammas[i : i + 2].copy(), costs[i : i + 2].copy()) for i in range(2)
    ]
    for _ in range(100):
        v = rng.normal(size=2)
        for i in (1, 2):
            h = ls.widths[i - 1]
            sf = SampledFunction(pieces[i - 1].gammas, pieces[i - 1].values)
            expected = (
                np.sum(v[: i - 1])
                - ls.gammas[i - 1] / h * v[i - 1]
                + brute_conjugate(sf, v[i - 1] / h)
            )
            got = lifted_conjugate_eval(ls, pieces, v, i)
            assert abs(got - expected) < 1e-9


def test_baseline_r_examples():
    ls = LabelSpace(np.array([0.0, 1.0, 2.0]))
    grid = GridShape(1, 1)
    costs = (ls.gammas**2).reshape(1, -1)
    bc = BaselineCosts(grid, ls, costs)
    np.testing.assert_allclose(baseline_r(bc), [[1.0, 3.0]])
    # constant costs -> zero increments
    bc0 = BaselineCosts(grid, ls, np.full((1, 3), 2.5))
    np.testing.assert_allclose(baseline_r(bc0), 0.0)
    # baseline value at u=(1, 0.5): rho(0) + <u, r> = 0 + 1 + 1.5 = 2.5,
    # overestimating the true rho(1.5) = 2.25
    u = np.array([1.0, 0.5])
    val = bc.costs[0, 0] + u @ baseline_r(bc)[0]
    assert abs(val - 2.5) < 1e-12
    assert val > 1.5**2


def test_baseline_interp():
    ls = LabelSpace(np.array([0.0, 1.0, 2.0]))
    grid = GridShape(2, 1)
    bc = BaselineCosts(grid, ls, np.array([[0.0, 1.0, 4.0], [1.0, 0.0, 1.0]]))
    np.testing.assert_allclose(bc.interp(np.array([0.5, 1.5])), [0.5, 0.5])
    np.testing.assert_allclose(bc.interp(np.array([2.0, 0.0])), [4.0, 1.0])


def test_sample_costs_affine_and_midpoint():
    grid = GridShape(2, 1)
    ls = LabelSpace(np.array([0.0, 1.0]))
    dt = sample_costs(lambda g: np.array([2 * g + 1, -g]), grid, ls, 8)
    assert dt.pcnt.max() == 2  # affine costs hull to two vertices
    p = dt.piece(0, 0)
    np.testing.assert_allclose(piece_eval(p, np.array([0.0, 1.0])), [1.0, 3.0])
    # S=2: midpoint kept iff below the chord
    dt2 = sample_costs(lambda g: np.array([(g - 0.5) ** 2, (g - 0.5) ** 2]), grid, ls, 2)
    assert dt2.pcnt[0, 0] == 3
    with pytest.raises(ValueError):
        sample_costs(lambda g: np.zeros(2), grid, ls, 1)
    with pytest.raises(ValueError):
        sample_costs(lambda g: np.full(2, np.nan), grid, ls, 2)


def test_dataterm_volume_shapes_and_accessors():
    grid = GridShape(3, 2)
    ls = LabelSpace.uniform(0, 1, 4)
    qa = np.ones((6, 3))
    qb = np.zeros((6, 3))
    qc = np.zeros((6, 3))
    dt = DatatermVolume.from_quadratic(grid, ls, qa, qb, qc)
    piece = dt.piece(4, 2)
    assert isinstance(piece, Quadratic)
    assert piece.lo == pytest.approx(2 / 3)
    assert len(dt.pixel_pieces(0)) == 3
    with pytest.raises(ValueError):
        DatatermVolume.from_quadratic(grid, ls, -qa, qb, qc)


def test_eval_cost_quadratic_and_polyline():
    grid = GridShape(2, 1)
    ls = LabelSpace(np.array([0.0, 1.0, 2.0]))
    f = np.array([0.5, 1.5])
    qa = np.ones((2, 2))
    qb = np.stack([-2 * f, -2 * f], axis=1)
    qc = np.stack([f * f, f * f], axis=1)
    dt = DatatermVolume.from_quadratic(grid, ls, qa, qb, qc)
    got = dt.eval_cost(np.array([0.25, 1.0]))
    np.testing.assert_allclose(got, [(0.25 - 0.5) ** 2, (1.0 - 1.5) ** 2])
    dtp = sample_costs(lambda g: (g - f) ** 2, grid, ls, 8)
    got = dtp.eval_cost(np.array([0.5, 1.5]))
    assert np.all(got <= 1e-9)  # hull touches the sampled minimum


def test_from_pieces_mixed_roundtrip():
    grid = GridShape(2, 1)
    ls = LabelSpace(np.array([0.0, 1.0, 2.0]))
    pieces = [
        [Quadratic(1.0, 0.0, 0.0, 0.0, 1.0), PolyLine(np.array([1.0, 2.0]), np.array([0.5, 0.1]))],
        [PolyLine(np.array([0.0, 0.4, 1.0]), np.array([1.0, 0.2, 0.3])), Quadratic(2.0, -1.0, 0.2, 1.0, 2.0)],
    ]
    dt = DatatermVolume.from_pieces(grid, ls, pieces)
    assert dt.is_quad[0, 0] and not dt.is_quad[0, 1]
    for p in range(2):
        for i in range(2):
            orig, back = pieces[p][i], dt.piece(p, i)
            assert type(orig) is type(back)
            xs = np.linspace(ls.gammas[i], ls.gammas[i + 1], 17)
            np.testing.assert_allclose(piece_eval(back, xs), piece_eval(orig, xs), atol=1e-12)
    with pytest.raises(ValueError):
        bad = [[Quadratic(1.0, 0.0, 0.0, 0.0, 0.5), pieces[0][1]], pieces[1]]
        DatatermVolume.from_pieces(grid, ls, bad)


def test_cost_volume_roundtrip_and_interp():
    grid = GridShape(2, 2)
    costs = np.arange(12.0).reshape(4, 3)
    vol = CostVolume(grid, 0.0, 2.0, costs)
    np.testing.assert_allclose(vol.gammas, [0, 1, 2])
    np.testing.assert_allclose(vol.interp(0.5), 0.5 * costs[:, 0] + 0.5 * costs[:, 1])
    ls = LabelSpace(np.array([0.0, 1.0, 2.0]))
    bc = volume_to_baseline(vol, ls)
    np.testing.assert_allclose(bc.costs, costs)
    dt = volume_to_dataterm(vol, ls)
    assert dt.pg.shape[:2] == (4, 2)
    # linear columns hull to their two endpoints
    assert dt.pcnt.max() == 2


def test_volume_to_dataterm_unaligned_labels():
    grid = GridShape(1, 1)
    gam = np.linspace(0, 1, 9)
    costs = ((gam - 0.37) ** 2).reshape(1, -1)
    vol = CostVolume(grid, 0.0, 1.0, costs)
    ls = LabelSpace(np.array([0.0, 0.55, 1.0]))
    dt = volume_to_dataterm(vol, ls)
    for i in range(2):
        p = dt.piece(0, i)
        xs = np.linspace(p.lo, p.hi, 33)
        sampled = np.array([vol.interp(x)[0] for x in xs])
        assert np.all(piece_eval(p, xs) <= sampled + 1e-9)
