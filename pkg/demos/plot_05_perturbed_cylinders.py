"""
Normal graphs over a catenary cylinder
======================================

Pushing the cylinder by u-bar along its normal gives a surface whose angle
quotient eta2/eta3 has a closed form in terms of u-bar and the profile.  The
closed form is checked against the normal computed from the parametrisation,
then the decay bound near the asymptotes, the moving-plane gap and the
extremum principle for the quotient are exercised.
"""

import numpy as np

from phicat import (
    GraphPatch,
    UBAR_FAMILIES,
    WeightSpec,
    decay_bound_check,
    eta_quotient_extremum_check,
    grim_reaper_patch,
    integrate_profile,
    make_boundary_from_profile,
    moving_plane_check,
    perturbed_cylinder_build,
    quotient_formula_check,
    solve_graph_equation,
)

for spec, h in ((WeightSpec.identity(), 0.0), (WeightSpec.alpha_log(2), 1.0)):
    profile = integrate_profile(spec, h)
    print(f"{spec.family}, h={h:g}, half-width {profile.lambda_estimate:.6f}")
    for family in UBAR_FAMILIES:
        pc = perturbed_cylinder_build(profile, family)
        q = quotient_formula_check(pc, spec)
        d = decay_bound_check(pc)
        print(f"  {family:12s} discrepancy {q.max_discrepancy:.1e}  max|quotient| {q.max_abs_quotient:.1e}  decay bound {d.bound_holds}")

# the reflection of the left part across x1 = t lies above the right part
rep = moving_plane_check(grim_reaper_patch(n=129), 0.3)
print(f"moving plane t=0.3: smallest gap {rep.min_gap:.2e}")

# eta2/eta3 on a solved perturbed patch peaks on the boundary
ID = WeightSpec.identity()
grid = GraphPatch((-1.2, 1.2), (-1.0, 1.0), np.zeros((65, 65)))
patch, _ = solve_graph_equation(ID, grid, make_boundary_from_profile(integrate_profile(ID, 0.0), grid, perturbation=(0.05, 1.0, 1.2)))
ext = eta_quotient_extremum_check(patch, ID)
print(f"quotient range inside [{ext.interior_min:.3e}, {ext.interior_max:.3e}], on the boundary [{ext.boundary_min:.3e}, {ext.boundary_max:.3e}]")
