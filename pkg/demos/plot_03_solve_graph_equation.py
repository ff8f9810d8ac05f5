"""
Solving the graph equation with Newton's method
===============================================

On a rectangle inside the slab |x1| < pi/2 the Dirichlet problem with grim
reaper boundary values has the grim reaper as solution.  The discrete error
falls by four each time the grid is refined, and even boundary data give an
exactly even solution.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from phicat import BoundaryData, GraphPatch, WeightSpec, integrate_profile, make_boundary_from_profile
from phicat import solve_graph_equation, symmetry_defect

OUT = os.environ.get("PHICAT_DEMO_OUT", "demo_output")
os.makedirs(OUT, exist_ok=True)
ID = WeightSpec.identity()

errors = []
for n in (33, 65, 129):
    grid = GraphPatch((-1.2, 1.2), (-1.0, 1.0), np.zeros((n, n)))
    patch, rep = solve_graph_equation(ID, grid, BoundaryData.from_function(lambda X, Y: -np.log(np.cos(X)), grid))
    X, _ = patch.mesh()
    errors.append(np.max(np.abs(patch.values + np.log(np.cos(X)))))
    print(f"n={n:3d}: {rep.iterations} Newton steps, residual {rep.final_residual_norm:.1e}, error {errors[-1]:.2e}")
print("observed orders", np.round(np.log2(np.array(errors[:-1]) / errors[1:]), 3))

# a boundary bump that is even in x1 keeps the solution even
profile = integrate_profile(ID, 0.0)
grid = GraphPatch((-1.2, 1.2), (-1.0, 1.0), np.zeros((65, 65)))
bumped, rep = solve_graph_equation(ID, grid, make_boundary_from_profile(profile, grid, perturbation=(0.1, 1.0, 1.2)))
print(f"perturbed solve: symmetry defect {symmetry_defect(bumped):.1e}")
print(rep.note)

fig, ax = plt.subplots(figsize=(5, 4))
im = ax.pcolormesh(bumped.x, bumped.y, (bumped.values + np.log(np.cos(bumped.mesh()[0]))).T, shading="auto")
fig.colorbar(im, label="u - grim reaper")
ax.set_xlabel("x1")
ax.set_ylabel("x2")
fig.savefig(os.path.join(OUT, "perturbed_solution.svg"))
