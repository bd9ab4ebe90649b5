"""The forced heat response and its operator bounds.

The solvers never step the differential equation directly; they iterate
integral maps built from two primitives.  The cumulative heat response
(a Duhamel integral, discretized by freezing the forcing at the left
endpoint of each step) and its divergence-form cousin, which takes a
matrix forcing, applies a row divergence and the Leray projection in
Fourier space, and returns a divergence-free velocity.

Both are bounded maps from the forcing norm (weighted sup + cylinder mass)
into the solution and velocity norms; the demo measures those bounds on a
small corpus.
"""

import numpy as np

from geoflow import (
    Field,
    GridSpec,
    SpaceTimeField,
    TimeLadder,
    duhamel_heat,
    duhamel_leray_div,
    forcing_norm,
    solution_norm,
    spectral_divergence,
    velocity_norm,
)
from geoflow.families import forcing_family

grid = GridSpec(dim=2, points_per_axis=32, period=2.0 * np.pi)
ladder = TimeLadder(t_final=0.25, steps=64)

# --- a closed-form check ---------------------------------------------------
# constant forcing c: the response is exactly t * c at every ladder point.
c = np.array([0.75, -0.25])
const = SpaceTimeField(grid, ladder.t_final,
                       np.tile(c, (ladder.steps + 1, grid.sites, 1)))
resp = duhamel_heat(const)
exact = ladder.times[:, None, None] * c[None, None, :]
print("constant forcing: response is t * c on the ladder")
print(f"  max error {np.abs(resp.values - exact).max():.3e}")

# --- operator bounds on a corpus -------------------------------------------
print("\nheat response measured from forcing norm into solution norm")
ratios = []
for seed in range(1000, 1010):
    f = forcing_family(grid, ladder, components=3, seed=seed)
    ratios.append(solution_norm(duhamel_heat(f)).value / forcing_norm(f).value)
print(f"  10 forcings: ratios in [{min(ratios):.4f}, {max(ratios):.4f}]")

print("\nprojected divergence-form response into the velocity norm")
vratios = []
for seed in range(5000, 5010):
    t = forcing_family(grid, ladder, components=4, seed=seed)  # 2x2 tensor
    w = duhamel_leray_div(t)
    vratios.append(velocity_norm(w).value / forcing_norm(t).value)
print(f"  10 tensor forcings: ratios in [{min(vratios):.4f}, {max(vratios):.4f}]")

# the output is divergence-free by construction, slice by slice
t = forcing_family(grid, ladder, components=4, seed=5000)
w = duhamel_leray_div(t)
worst = max(
    spectral_divergence(Field(grid, w.values[j])).sup_norm()
    for j in range(ladder.steps + 1)
)
print(f"  worst slice divergence of the response: {worst:.3e}")
