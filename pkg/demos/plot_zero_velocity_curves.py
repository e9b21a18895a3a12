"""
Zero-velocity curves and triangular ovals
=========================================

Sample the zero-velocity field on a grid, trace contours slightly above the
triangular minimum, and sort each frame into "yes", "very-small" or "no".
SVG files are written next to this script in ``zvc_output/``.
"""

from pathlib import Path

from chermnykh import derive_params, find_family
from chermnykh.zvc import (
    DEFAULT_BBOX,
    LARGE_OFFSET,
    SMALL_OFFSET,
    classify_ovals,
    contours_to_svg,
    extract_contours,
    sample_grid,
    table1,
)

out = Path(__file__).with_name("zvc_output")
out.mkdir(exist_ok=True)

###############################################################################
# One frame in detail
# -------------------
# With q1 = 1 and a belt of mass 0.2 the triangular points are minima of the
# field.  Level sets just above the minimum close around them.

p = derive_params(mu=0.025, q1=1.0, A2=0.02, Mb=0.2, T=0.01)
grid = sample_grid(p, DEFAULT_BBOX, 400)
res = classify_ovals(p, grid=grid)
c = res["L4"].jacobi
sets = [extract_contours(grid, c + dc) for dc in (SMALL_OFFSET, LARGE_OFFSET)]
l4, l5 = find_family(p, "L4"), find_family(p, "L5")
svg = contours_to_svg(sets, DEFAULT_BBOX, p.primaries, [("L4", l4.x, l4.y), ("L5", l5.x, l5.y)])
(out / "frame_C_II.svg").write_text(svg)
print(f"C(L4) = {c:.6f}; oval areas {res['L4'].small_area:.2e} and {res['L4'].large_area:.2e}")

###############################################################################
# The full table
# --------------
# Rows A-C sweep q1 in {0, 0.5, 1} and columns A2 in {0, 0.02, 0.04}; row D
# raises the belt mass.  Lowering q1 first shrinks the ovals and then removes
# them altogether.

frames = table1(nx=400)
for row in "ABCD":
    labels = [f["label"] for f in frames if f["frame"] == row]
    print(row, " ".join(f"{lb:>10}" for lb in labels))
