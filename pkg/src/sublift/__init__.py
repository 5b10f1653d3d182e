"""Sublabel-accurate convex relaxation of scalar variational problems.

Solves energies of the form

    min_u  sum_x rho(x, u(x)) + lambda * TV(u)

over scalar fields u with values in a closed interval, for arbitrary
(possibly nonconvex) pointwise costs rho.  The range is sampled at a few
labels, the cost is convexified on each label interval, and the resulting
lifted saddle-point problem is solved with a preconditioned first-order
primal-dual method.  A classical lifting method (linear between labels) is
included as a baseline, and brute-force oracles validate every closed-form
derivation used along the way.
"""

from .labels import GridShape, LabelSpace, LiftedField, ScalarField, lift, unlift, unlift_field
from .dataterm import (
    BaselineCosts,
    ConvexPiece,
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
from .projections import (
    RegularizerKind,
    proj_ball_l2,
    proj_ball_linf,
    proj_K,
    proj_monotone_box,
    proj_parabola_epigraph,
    proj_polyline_conjugate_epigraph,
)
from .solver import (
    DivergenceError,
    DualState,
    EnergyLog,
    SolverConfig,
    baseline_lifted_energy,
    div,
    energy_unlifted,
    grad,
    solve_baseline,
    solve_sublabel,
    variable_count,
)
from . import problems, oracles, synthetic, fileio

__version__ = "0.1.0"
