"""Command-line front end: problem selection, IO, solver invocation.

Subcommands: rof, robust, stereo, unwrap, dff, verify.  Flags override
values from an optional ``key = value`` config file.  Exit codes: 0 success,
1 usage error, 2 numerical failure, 3 IO failure.
"""

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import fileio, oracles, problems
from .dataterm import BaselineCosts, volume_to_baseline, volume_to_dataterm
from .labels import LabelSpace, ScalarField, unlift_field
from .projections import RegularizerKind
from .solver import (
    DivergenceError,
    SolverConfig,
    solve_baseline,
    solve_sublabel,
    variable_count,
)

TWO_PI = 2.0 * np.pi


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_PROBLEMS = ("rof", "robust", "stereo", "unwrap", "dff")

_DEFAULTS = {
    "rof": dict(gamma_min=0.0, gamma_max=1.0, lam=0.25),
    "robust": dict(gamma_min=0.0, gamma_max=1.0, lam=1.0, alpha=25.0, nu=0.025),
    "stereo": dict(lam=0.1),
    "unwrap": dict(gamma_min=0.0, gamma_max=2.0 * TWO_PI, lam=0.005),
    "dff": dict(lam=0.25),
}


@dataclass
class RunConfig:
    subcommand: str
    input: str = None
    left: str = None
    right: str = None
    stack: list = None
    costvolume: str = None
    output: str = "out"
    labels: int = 8
    gamma_min: float = None
    gamma_max: float = None
    lam: float = None
    method: str = "sublabel"
    regularizer: str = "iso"
    max_iters: int = 20000
    tol: float = 1e-6
    check_every: int = 50
    adaptive: bool = False
    deterministic: bool = True
    sublabels: int = 8
    alpha: float = 25.0
    nu: float = 0.025
    patch: int = 4
    trunc: float = 0.5
    disp_samples: int = None
    window: int = 3
    trials: int = 10000


def _build_parser():
    top = _Parser(prog="sublift", description="Sublabel-accurate lifting solver")
    sub = top.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file; flags win")
        p.add_argument("--output", default=None, help="output directory (default: out)")
        p.add_argument("--labels", type=int, default=None, help="number of labels L (>= 2)")
        p.add_argument("--gamma-min", type=float, default=None, dest="gamma_min")
        p.add_argument("--gamma-max", type=float, default=None, dest="gamma_max")
        p.add_argument("--lambda", type=float, default=None, dest="lam", help="TV weight")
        p.add_argument("--method", choices=("sublabel", "baseline"), default=None)
        p.add_argument("--regularizer", choices=("iso", "aniso"), default=None)
        p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
        p.add_argument("--tol", type=float, default=None, help="stopping residual")
        p.add_argument("--check-every", type=int, default=None, dest="check_every")
        p.add_argument("--adaptive", action="store_true", default=None)
        p.add_argument(
            "--no-deterministic",
            action="store_false",
            dest="deterministic",
            default=None,
            help="record real wall times instead of zeros",
        )
        p.add_argument("--sublabels", type=int, default=None, help="cost samples per interval")

    p = sub.add_parser("rof", help="quadratic-difference denoising")
    p.add_argument("--input", required=True)
    common(p)

    p = sub.add_parser("robust", help="truncated-quadratic denoising")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    common(p)

    p = sub.add_parser("stereo", help="disparity from a rectified pair")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--costvolume", help="precomputed CVOL instead of an image pair")
    p.add_argument("--patch", type=int, default=None)
    p.add_argument("--trunc", type=float, default=None)
    p.add_argument("--disp-samples", type=int, default=None, dest="disp_samples")
    common(p)

    p = sub.add_parser("unwrap", help="total-variation phase unwrapping")
    p.add_argument("--input", required=True)
    common(p)

    p = sub.add_parser("dff", help="depth from a focal stack")
    p.add_argument("--stack", nargs="*", default=None)
    p.add_argument("--costvolume")
    p.add_argument("--window", type=int, default=None)
    common(p)

    p = sub.add_parser("verify", help="run the oracle verification battery")
    p.add_argument("--output", default=None)
    p.add_argument("--trials", type=int, default=None, help="constraint samples")
    return top


def _read_config_file(path):
    values = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                key = key.replace("-", "_")
                if key == "lambda":
                    key = "lam"
                values[key] = value
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    return values


def _coerce(value, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def parse_args(argv):
    """Parse flags (and an optional config file) into a RunConfig."""
    ns = _build_parser().parse_args(argv)
    cfg = RunConfig(subcommand=ns.subcommand)
    file_values = {}
    if getattr(ns, "config", None):
        file_values = _read_config_file(ns.config)
    for key in vars(cfg):
        if key == "subcommand":
            continue
        flag = getattr(ns, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
        elif key in file_values:
            default = getattr(cfg, key)
            like = default if default is not None else _DEFAULTS.get(ns.subcommand, {}).get(key, "")
            setattr(cfg, key, _coerce(file_values[key], like))
    for key, value in _DEFAULTS.get(ns.subcommand, {}).items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)
    if cfg.subcommand != "verify":
        if cfg.labels < 2:
            raise UsageError("--labels must be >= 2")
        if cfg.lam is not None and cfg.lam <= 0:
            raise UsageError("--lambda must be > 0")
        if (
            cfg.gamma_min is not None
            and cfg.gamma_max is not None
            and not cfg.gamma_min < cfg.gamma_max
        ):
            raise UsageError("gamma bounds must be ordered")
    return cfg


def _load_field(path):
    try:
        img = fileio.read_image(path)
    except OSError as exc:
        raise IOError(f"cannot read {path}: {exc}")
    return ScalarField.from_image(img)


def _build_problem(cfg):
    """Returns (ls, dataterm-or-None, baseline-or-None, cost_fn, grid)."""
    if cfg.subcommand in ("rof", "robust", "unwrap"):
        f = _load_field(cfg.input)
        if cfg.subcommand == "unwrap":
            f = ScalarField(f.grid, np.mod(f.values, TWO_PI))
        ls = LabelSpace.uniform(cfg.gamma_min, cfg.gamma_max, cfg.labels)
        if cfg.subcommand == "rof":
            f = ScalarField(f.grid, np.clip(f.values, ls.lo, ls.hi))
            cost_fn = problems.rof_cost_fn(f)
            dt = problems.build_rof(f, ls) if cfg.method == "sublabel" else None
        elif cfg.subcommand == "robust":
            cost_fn = problems.trunc_quad_cost_fn(f, cfg.alpha, cfg.nu)
            dt = (
                problems.build_trunc_quad(f, cfg.alpha, cfg.nu, ls, cfg.sublabels)
                if cfg.method == "sublabel"
                else None
            )
        else:
            cost_fn = problems.unwrap_cost_fn(f)
            dt = problems.build_unwrap(f, ls, cfg.sublabels) if cfg.method == "sublabel" else None
        bc = (
            BaselineCosts.from_cost_fn(f.grid, ls, cost_fn)
            if cfg.method == "baseline"
            else None
        )
        return ls, dt, bc, cost_fn, f.grid

    if cfg.subcommand == "stereo":
        if cfg.costvolume:
            try:
                vol = fileio.read_cvol(cfg.costvolume)
            except OSError as exc:
                raise IOError(f"cannot read {cfg.costvolume}: {exc}")
        else:
            if not (cfg.left and cfg.right):
                raise UsageError("stereo needs --left and --right (or --costvolume)")
            left = fileio.read_image(cfg.left)
            right = fileio.read_image(cfg.right)
            lo = 0.0 if cfg.gamma_min is None else cfg.gamma_min
            hi = float(cfg.labels - 1) if cfg.gamma_max is None else cfg.gamma_max
            n = cfg.disp_samples or max(int(round(hi - lo)) + 1, cfg.labels)
            disparities = np.linspace(lo, hi, n)
            vol = problems.build_stereo_cost(left, right, disparities, cfg.patch, cfg.trunc)
    else:  # dff
        if cfg.costvolume:
            try:
                vol = fileio.read_cvol(cfg.costvolume)
            except OSError as exc:
                raise IOError(f"cannot read {cfg.costvolume}: {exc}")
        else:
            if not cfg.stack or len(cfg.stack) < 2:
                raise UsageError("dff needs --stack with at least two images")
            frames = [fileio.read_image(p) for p in cfg.stack]
            vol = problems.build_dff_cost(frames, cfg.window)
    ls = LabelSpace.uniform(vol.gamma_lo, vol.gamma_hi, cfg.labels)
    dt = volume_to_dataterm(vol, ls) if cfg.method == "sublabel" else None
    bc = volume_to_baseline(vol, ls) if cfg.method == "baseline" else None
    return ls, dt, bc, vol.cost_fn(), vol.grid


def run(cfg):
    """Build, solve, and write result/energy/summary files."""
    if cfg.subcommand == "verify":
        return _run_verify(cfg)
    started = time.perf_counter()
    ls, dt, bc, cost_fn, grid = _build_problem(cfg)
    scfg = SolverConfig(
        lam=cfg.lam,
        max_iters=cfg.max_iters,
        check_every=cfg.check_every,
        stop_tol=cfg.tol,
        adaptive=bool(cfg.adaptive),
        regularizer=RegularizerKind.parse(cfg.regularizer),
        deterministic=cfg.deterministic,
    )
    outdir = cfg.output
    os.makedirs(outdir, exist_ok=True)
    try:
        if cfg.method == "sublabel":
            lf, log = solve_sublabel(dt, scfg, cost_fn=cost_fn)
        else:
            lf, log = solve_baseline(bc, scfg, cost_fn=cost_fn)
    except DivergenceError as exc:
        sys.stderr.write(f"sublift: {exc}\n")
        return 2

    result = unlift_field(ls, lf)
    img = result.to_image()
    fileio.write_pfm(os.path.join(outdir, "result.pfm"), img)
    vmin, vmax = float(img.min()), float(img.max())
    span = (vmax - vmin) if vmax > vmin else 1.0
    fileio.write_pgm(os.path.join(outdir, "preview.pgm"), (img - vmin) / span)
    log.write_csv(os.path.join(outdir, "energy.csv"))

    wall = "0.000 (deterministic mode)" if cfg.deterministic else f"{time.perf_counter() - started:.3f}"
    n_sub = variable_count(grid, ls, "sublabel")
    n_base = variable_count(grid, ls, "baseline")
    lines = [
        f"problem: {cfg.subcommand}",
        f"method: {cfg.method}",
        f"grid: {grid.width}x{grid.height}",
        f"labels: {ls.L}",
        f"gamma: [{ls.lo:.9g}, {ls.hi:.9g}]",
        f"lambda: {cfg.lam:.9g}",
        f"regularizer: {RegularizerKind.parse(cfg.regularizer).value}",
        f"iterations: {log.final_iteration}",
        f"final_energy: {log.final_energy:.12e}",
        f"variables_sublabel: 6N(L-1)+N = {n_sub}",
        f"variables_baseline: 4N(L-1) = {n_base}",
        f"preview_scale: min={vmin:.9g} max={vmax:.9g}",
        f"wall_time_s: {wall}",
    ]
    if cfg.subcommand == "robust":
        lines.insert(6, f"alpha: {cfg.alpha:.9g}")
        lines.insert(7, f"nu: {cfg.nu:.9g}")
    with open(os.path.join(outdir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _run_verify(cfg):
    reports = oracles.run_all_checks(trials_k=cfg.trials)
    text = oracles.reports_to_text(reports)
    print(text, end="")
    outdir = cfg.output
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.txt"), "w") as fh:
            fh.write(text)
        with open(os.path.join(outdir, "report.csv"), "w") as fh:
            fh.write(oracles.reports_to_csv(reports))
    return 0 if all(r.passed for r in reports) else 2


def main(argv=None):
    threads = os.environ.get("SUBLIFT_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        sys.stderr.write(f"sublift: usage error: {exc}\n")
        return 1
    try:
        return run(cfg)
    except UsageError as exc:
        sys.stderr.write(f"sublift: usage error: {exc}\n")
        return 1
    except (OSError, IOError, ValueError) as exc:
        sys.stderr.write(f"sublift: io error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
