"""
A finite-grid look at uniqueness
================================

Solutions asymptotic to a catenary cylinder are the cylinder itself.  The
finite surrogate: start Newton from strongly x2-dependent guesses with
cylinder boundary data and check that every run lands on the same
x2-invariant surface, with eta2 at rounding level.
"""

from phicat import WeightSpec, uniqueness_experiment

rep = uniqueness_experiment(WeightSpec.identity(), 0.0, n=65, amplitudes=(0.0, 0.05, 0.2))
for amp, var, eta2, r in zip(rep.amplitudes, rep.y_variation, rep.max_eta2, rep.reports):
    print(f"start amplitude {amp:4.2f}: {r.iterations} steps, x2 variation {var:.1e}, max |eta2| {eta2:.1e}")
print(f"pairwise agreement {rep.pairwise_agreement:.1e}; hypotheses hold: {rep.hypotheses_hold}")

# a weight outside the hypotheses still converges here, and the report says so
rep = uniqueness_experiment(WeightSpec.alpha_log(2), 1.0, n=65)
print(f"alpha_log(2): worst metric {rep.worst:.1e}, hypotheses hold: {rep.hypotheses_hold}")
