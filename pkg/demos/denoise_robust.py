"""Robust denoising with a truncated quadratic dataterm.

The cost (alpha/2) * min((u - f)^2, nu) caps the penalty for outliers, so
salt-and-pepper corruption is rejected instead of smeared.  The cost is
nonconvex; each label interval gets the lower convex hull of cost samples.
The point of the demo: with only 4 labels the sublabel method reaches a
lower model energy than the classical lifting with 16.
"""

import os

import numpy as np

import sublift as sl
from sublift.labels import ScalarField

OUT = os.path.join("demo-out", "denoise_robust")
ALPHA, NU, LAM = 25.0, 0.025, 1.0

rng = np.random.default_rng(42)
clean = sl.synthetic.piecewise_smooth_image(64, 64)
noisy = sl.synthetic.add_noise(clean, rng, gauss_sigma=0.05, salt_pepper=0.05)
f = ScalarField.from_image(noisy)
cost = sl.problems.trunc_quad_cost_fn(f, ALPHA, NU)

os.makedirs(OUT, exist_ok=True)
sl.fileio.write_pgm(os.path.join(OUT, "noisy.pgm"), noisy)

print("sublabel method, 4 labels ...")
ls4 = sl.LabelSpace.uniform(0.0, 1.0, 4)
dt = sl.problems.build_trunc_quad(f, ALPHA, NU, ls4)
cfg = sl.SolverConfig(lam=LAM, max_iters=8000, stop_tol=1e-8)
lf, log = sl.solve_sublabel(dt, cfg, cost_fn=cost)
e_sub = sl.energy_unlifted(cost, ls4, lf, LAM, "iso")
denoised = sl.unlift_field(ls4, lf).to_image()
sl.fileio.write_pgm(os.path.join(OUT, "sublabel_L4.pgm"), denoised)
print(f"  energy {e_sub:.4f} after {log.final_iteration} iterations")

print("baseline lifting, 16 labels ...")
ls16 = sl.LabelSpace.uniform(0.0, 1.0, 16)
bc = sl.BaselineCosts.from_cost_fn(f.grid, ls16, cost)
lfb, logb = sl.solve_baseline(bc, cfg, cost_fn=cost)
e_base = sl.energy_unlifted(cost, ls16, lfb, LAM, "iso")
sl.fileio.write_pgm(os.path.join(OUT, "baseline_L16.pgm"), sl.unlift_field(ls16, lfb).to_image())
print(f"  energy {e_base:.4f} after {logb.final_iteration} iterations")

print(f"\nsublabel with 4 labels beats baseline with 16: {e_sub:.4f} <= {e_base:.4f}")
print(f"PSNR vs clean: sublabel {-10 * np.log10(np.mean((denoised - clean) ** 2)):.2f} dB")
print(f"results written to {OUT}/")
