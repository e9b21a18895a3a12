"""
Equilibrium points under radiation pressure
===========================================

Start from the classical restricted problem, then switch on radiation
pressure from the larger primary and watch the five equilibria move.
"""

import numpy as np

from chermnykh import derive_params, find_all, stability_report

# The classical problem: L1..L3 on the axis, L4/L5 at the vertices of
# equilateral triangles.  The collinear points are saddles; L4/L5 are linearly
# stable because mu = 0.025 sits below the Routh value.
p = derive_params(mu=0.025)
for pt in find_all(p):
    r = stability_report(p, pt)
    print(f"{pt.family}: ({pt.x:+.6f}, {pt.y:+.6f})  {r.stability}")

###############################################################################
# Radiation pressure with drag
# ----------------------------
# q1 < 1 weakens the attraction of the first primary, and the velocity
# dependent drag (W1 > 0) pushes every point off the axis.  The triangular
# points acquire a small positive growth rate.

for q1 in (0.99, 0.9, 0.5):
    p = derive_params(mu=0.025, q1=q1, cd=1e4)
    pts = find_all(p)
    l4 = stability_report(p, pts[3])
    print(f"q1={q1}: L1 y = {pts[0].y:+.2e}, L4 = ({pts[3].x:.4f}, {pts[3].y:.4f}),"
          f" max Re = {l4.max_re:.2e}")

###############################################################################
# Oblateness and the belt
# -----------------------
# A2 and the belt mass Mb raise the mean motion and shift the triangular
# points; without drag the configuration stays mirror symmetric.

for A2, Mb in ((0.0, 0.0), (0.02, 0.0), (0.0, 0.2), (0.02, 0.2)):
    p = derive_params(mu=0.025, A2=A2, Mb=Mb, T=0.01)
    l4 = find_all(p)[3]
    print(f"A2={A2:<5} Mb={Mb:<4} n={p.n:.5f}  L4=({l4.x:.5f}, {l4.y:.5f})"
          f"  |r1|={np.hypot(l4.x + p.mu, l4.y):.5f}")
