"""Depth from a focal stack via windowed modified-Laplacian contrast.

Each frame of the synthetic stack is sharp in a different horizontal band.
Costs are high where a frame is blurry, so minimizing the lifted energy
with the frame index as the label recovers the depth bands; the sublabel
decoding interpolates between frames instead of snapping to indices.
"""

import os

import numpy as np

import sublift as sl
from sublift.dataterm import volume_to_dataterm

OUT = os.path.join("demo-out", "dff")
N_FRAMES = 4

frames, depth = sl.synthetic.focus_stack(48, 48, n_frames=N_FRAMES)
print(f"stack of {N_FRAMES} frames, band depth map as ground truth")

vol = sl.problems.build_dff_cost(frames)
ls = sl.LabelSpace.uniform(0.0, float(N_FRAMES - 1), N_FRAMES)
dt = volume_to_dataterm(vol, ls)
cfg = sl.SolverConfig(lam=0.3, max_iters=5000, stop_tol=1e-9)
lf, log = sl.solve_sublabel(dt, cfg, cost_fn=vol.cost_fn())
rec = sl.unlift_field(ls, lf).to_image()

agree = float(np.mean(np.abs(np.round(rec) - depth) <= 0))
print(f"rounded depth agrees with ground truth on {agree:.1%} of pixels")
os.makedirs(OUT, exist_ok=True)
sl.fileio.write_pfm(os.path.join(OUT, "depth.pfm"), rec)
for j, frame in enumerate(frames):
    sl.fileio.write_pgm(os.path.join(OUT, f"frame{j}.pgm"), frame)
print(f"results written to {OUT}/")
