"""
Approximating the fundamental solution
======================================

A unit-mass bump of radius 1/l is used as the source on balls of radius
2, 4 and 8.  The last field approximates the fundamental solution, which for
s = 1/2 in the plane decays like 1/|x|.  A constant potential pushes it down.
"""

import math

from fracgreen import ExhaustionSchedule, FractionalOrder, Kernel, Potential, run_exhaustion
from fracgreen.fundamental import radial_profile

order = FractionalOrder(0.5, 2)
kernel = Kernel(order)
schedule = ExhaustionSchedule(radii=(2.0, 4.0, 8.0), scales=(4.0,))  # h = 1/16

rep = run_exhaustion(kernel, Potential(), schedule)
for st in rep.stages:
    print(f"a={st.radius:g}  N={st.N_side}  nodes={st.n_active}  its={st.iterations}  "
          f"min={st.min_value:.2e}  C={st.pointwise_bound_constant:.4f}")
print("Cauchy gaps between stages:", [f"{x:.3f}" for x in rep.cauchy_gaps])
fit = rep.decay_fit
print(f"log-log slope {fit.slope:.3f} (r^2 = {fit.r_squared:.5f}) on [{fit.r_min:.2f}, {fit.r_max:.2f}]")

# whole-space Riesz potential for comparison: Gamma(n/2-s) / (4^s pi^{n/2} Gamma(s)) |x|^{2s-n}
riesz = math.gamma(0.5) / (2 * math.pi * math.gamma(0.5))
for r, v, _ in radial_profile(rep.final_field, 0.5, 2.0, 6):
    print(f"r={r:.3f}  u={v:.5f}  Riesz={riesz / r:.5f}")

with_V = run_exhaustion(kernel, Potential("constant", 1.0, q=10), schedule)
print("max(u_V1 - u_V0):", (with_V.final_field.values - rep.final_field.values).max())
