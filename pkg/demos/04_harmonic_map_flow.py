"""Harmonic map heat flow into the sphere by Picard iteration.

The flow u_t - Lap u = A(u)(grad u, grad u) is solved as a fixed point of
its integral form: heat extension of the data plus the cumulative response
to the curvature forcing.  For small-oscillation data the map contracts
geometrically; the sphere constraint |u| = 1 is never enforced, so the
measured constraint defect shows the argument working numerically.

Great-circle data gives an exact oracle: for u0 = (cos th0, sin th0, 0)
with th0 = a sin(x1), the flow is th(t) = a e^(-t) sin(x1) lifted back to
the sphere, because the circle reduction linearizes the equation.
"""

import numpy as np

from geoflow import GridSpec, SolverConfig, TimeLadder, hmflow
from geoflow.families import oscillatory_angle

grid = GridSpec(dim=2, points_per_axis=32, period=2.0 * np.pi)
ladder = TimeLadder(t_final=0.25, steps=64)
cfg = SolverConfig(grid, ladder)

# --- solve and inspect the convergence record -------------------------------
u0 = oscillatory_angle(grid, amplitude=0.35, wavenumber=1, ambient_dim=3)
res = hmflow.solve(u0, cfg)
print(f"converged: {res.converged} after {len(res.increments)} iterations")
print("  increments:", "  ".join(f"{v:.2e}" for v in res.increments[:6]), "...")
print("  contraction estimates:",
      "  ".join(f"{v:.3f}" for v in res.contraction_estimates[:5]))
print(f"  constraint defect sup | |u|-1 | = {res.constraint_defect:.3e} "
      f"(no renormalization anywhere)")
print(f"  PDE residual sup = {res.residual_sup:.3e}")

# --- exact oracle ------------------------------------------------------------
x1 = grid.coordinates()[0].reshape(grid.sites)
theta = 0.35 * np.exp(-ladder.times)[:, None] * np.sin(x1)[None, :]
exact = np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=-1)
err = np.abs(res.solution.values - exact).max()
print(f"\ngreat-circle oracle: sup error {err:.3e} at dt = {ladder.dt:.4g}")

# --- independent cross-check: per-step exponential integrator ----------------
march = hmflow.time_march(u0, cfg)
print(f"fixed point vs time march: {np.abs(march.values - res.solution.values).max():.3e}")

# --- amplitude sweep: the small-data regime in one table ---------------------
print("\namplitude sweep (contraction grows with data size)")
print(f"  {'amplitude':>9} {'oscillation':>11} {'iters':>5} "
      f"{'contraction':>11} {'amplification':>13}")
report = hmflow.amplitude_sweep(
    lambda a: oscillatory_angle(grid, a, 1, 3), (0.05, 0.2, 0.8), cfg
)
for rec in report.records:
    print(f"  {rec.amplitude:9.2f} {rec.data_oscillation:11.4f} {rec.iterations:5d} "
          f"{rec.contraction:11.4f} {rec.amplification:13.4f}")
print(f"  largest amplitude of the converged run: {report.threshold}")
