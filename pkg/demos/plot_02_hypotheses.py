"""
Which weights have complete catenary cylinders
==============================================

The half-width is finite exactly when exp(-phi) is integrable above h.  For
phi = alpha log x that happens when alpha > 1.  A weight with bounded range,
such as arctan, never reaches a vertical asymptote; its profile becomes
asymptotically straight with slope sqrt(exp(2 (sup phi - phi(h))) - 1).
"""

import math

from phicat import IntegrationOptions, WeightSpec, check_hypotheses, classify_integrability, integrate_profile

for alpha in (0.5, 1, 1.5, 2, 3):
    print(f"alpha_log {alpha:>3}: exp(-phi) tail is {classify_integrability(WeightSpec.alpha_log(alpha), 1.0).value}")

# the full report also covers convexity and the bound on phi''/phi'
rep = check_hypotheses(WeightSpec.arctan(), reference_height=0.0)
for key, value in rep.to_dict().items():
    print(f"  {key}: {value}")

# a long run shows the slope settling at its limit
sol = integrate_profile(WeightSpec.arctan(), 0.0, IntegrationOptions(x_cap=1e4))
print(f"u'({sol.x[-1]:.0f}) = {sol.uprime[-1]:.6f}, limit {math.sqrt(math.expm1(math.pi)):.6f}")
