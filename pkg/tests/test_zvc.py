import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.measure import find_contours

from chermnykh.equilibria import find_family
from chermnykh.model import PhaseState, derive_params, jacobi_constant
from chermnykh.zvc import (
    DEFAULT_BBOX,
    NO,
    VERY_SMALL,
    YES,
    FieldGrid,
    classify_ovals,
    contours_to_csv,
    contours_to_svg,
    enclosing_oval,
    extract_contours,
    oval_classification,
    sample_grid,
    table1,
    zero_velocity_field,
)

MU = 0.025


def analytic_grid(f, bbox=(-1.5, 1.5, -1.5, 1.5), n=101):
    xs = np.linspace(bbox[0], bbox[1], n)
    ys = np.linspace(bbox[2], bbox[3], n)
    X, Y = np.meshgrid(xs, ys)
    return FieldGrid(bbox, n, n, xs, ys, f(X, Y), np.zeros((n - 1, n - 1), dtype=bool))


def _bilinear(g, x, y):
    i = min(np.searchsorted(g.xs, x) - 1, g.nx - 2)
    j = min(np.searchsorted(g.ys, y) - 1, g.ny - 2)
    i, j = max(i, 0), max(j, 0)
    tx = (x - g.xs[i]) / (g.xs[i + 1] - g.xs[i])
    ty = (y - g.ys[j]) / (g.ys[j + 1] - g.ys[j])
    v = g.values
    return ((1 - tx) * (1 - ty) * v[j, i] + tx * (1 - ty) * v[j, i + 1]
            + tx * ty * v[j + 1, i + 1] + (1 - tx) * ty * v[j + 1, i])


# ---------------------------------------------------------------- marching squares

def test_unit_circle():
    g = analytic_grid(lambda x, y: x * x + y * y)
    cs = extract_contours(g, 1.0)
    assert len(cs) == 1
    comp = cs.components[0]
    assert comp.closed
    assert np.all(comp.points[0] == comp.points[-1])
    h = g.spacing[0]
    r = np.hypot(comp.points[:, 0], comp.points[:, 1])
    assert np.max(np.abs(r - 1.0)) < 2 * h
    assert comp.area == pytest.approx(math.pi, rel=1e-2)
    assert comp.contains(0.0, 0.0) and not comp.contains(1.2, 0.0)


def test_levels_outside_range_are_empty():
    g = analytic_grid(lambda x, y: x * x + y * y)
    assert len(extract_contours(g, -0.1)) == 0
    assert len(extract_contours(g, 100.0)) == 0
    with pytest.raises(ValueError):
        extract_contours(g, float("nan"))


def test_open_components_end_on_the_boundary():
    g = analytic_grid(lambda x, y: x + 0.3 * y)
    cs = extract_contours(g, 0.1)
    assert len(cs) == 1 and not cs.components[0].closed
    assert cs.components[0].area == 0.0


def test_saddle_resolved_by_centre_value():
    # x*y has a saddle at the origin; a small positive level gives two hyperbola branches
    g = analytic_grid(lambda x, y: x * y, n=40)
    cs = extract_contours(g, 0.05)
    assert len(cs) == 2
    assert all(not c.closed for c in cs.components)


@settings(max_examples=20)
@given(st.floats(0.2, 2.0), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_vertices_lie_on_bilinear_level_set(level, cx, cy):
    g = analytic_grid(lambda x, y: (x - cx) ** 2 + 2.0 * (y - cy) ** 2 + 0.3 * x * y, n=61)
    for comp in extract_contours(g, level).components:
        for x, y in comp.points:
            assert _bilinear(g, x, y) == pytest.approx(level, abs=1e-12)


def test_true_field_residual_shrinks_with_refinement():
    f = lambda x, y: np.sin(2 * x) + np.cos(3 * y) + x * y  # noqa: E731
    residuals = []
    for n in (41, 81, 161):
        g = analytic_grid(f, n=n)
        pts = np.vstack([c.points for c in extract_contours(g, 0.4).components])
        res = np.max(np.abs(f(pts[:, 0], pts[:, 1]) - 0.4))
        assert res < 10 * g.spacing[0] ** 2 * 10  # well inside C h
        residuals.append(res)
    assert residuals[0] > residuals[1] > residuals[2]


def test_matches_skimage_vertices(classical):
    # independent marching squares: same edge crossings on a saddle-free window
    g = sample_grid(classical, (0.2, 0.8, 0.55, 1.15), 121)
    level = 3.0 - MU + MU**2 + 0.01
    ours = np.vstack([c.points for c in extract_contours(g, level).components])
    theirs = np.vstack(find_contours(g.values, level))
    h = g.spacing
    theirs_xy = np.column_stack([g.xs[0] + theirs[:, 1] * h[0], g.ys[0] + theirs[:, 0] * h[1]])
    a = {(round(x, 9), round(y, 9)) for x, y in ours}
    b = {(round(x, 9), round(y, 9)) for x, y in theirs_xy}
    assert a == b
    assert len(extract_contours(g, level).closed) == sum(
        1 for c in find_contours(g.values, level) if np.allclose(c[0], c[-1])
    )


# ---------------------------------------------------------------- field grid

def test_grid_masks_primaries_and_cut(drag, classical):
    g = sample_grid(classical, nx=64)
    assert g.mask.sum() >= 2
    finite = np.isfinite(g.values)
    assert finite.all()
    gd = sample_grid(drag, nx=64)
    assert gd.mask.sum() > g.mask.sum()  # cut cells left of the first primary
    j = np.searchsorted(gd.ys, 0.0) - 1
    assert gd.mask[j, 0] and not gd.mask[j, -1]


def test_grid_rejects_bad_shapes(classical):
    with pytest.raises(ValueError):
        sample_grid(classical, (1.0, 0.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        sample_grid(classical, nx=8)


def test_grid_is_mirror_symmetric_without_drag(full):
    p = derive_params(mu=MU, A2=0.02, Mb=0.2)
    g = sample_grid(p, nx=200)
    np.testing.assert_allclose(g.values, g.values[::-1, :], rtol=1e-12)


def test_contours_are_mirror_symmetric_without_drag():
    p = derive_params(mu=MU, A2=0.02, Mb=0.2)
    g = sample_grid(p, nx=200)
    pt = find_family(p, "L4")
    cs = extract_contours(g, float(zero_velocity_field(p, pt.x, pt.y)) + 0.02)
    pts = np.vstack([c.points for c in cs.components])
    a = {(round(x, 8), round(y, 8)) for x, y in pts}
    b = {(round(x, 8), round(-y, 8)) for x, y in pts}
    assert a == b


def test_table_regime_grid_is_finite_off_masks():
    p = derive_params(mu=MU, A2=0.02, Mb=0.2, T=0.01)
    g = sample_grid(p, DEFAULT_BBOX, 400)
    assert np.isfinite(g.values).all()


def test_grid_value_at_triangular_point_converges_quadratically():
    p = derive_params(mu=MU, q1=1.0, A2=0.02, Mb=0.2, T=0.01)
    pt = find_family(p, "L4")
    c = jacobi_constant(p, PhaseState(pt.x, pt.y))
    errs = [abs(_bilinear(sample_grid(p, nx=n), pt.x, pt.y) - c) for n in (101, 201, 401)]
    h = [3.2 / 100, 3.2 / 200, 3.2 / 400]
    for e, hh in zip(errs, h):
        assert e < 2.0 * hh**2


# ---------------------------------------------------------------- ovals

def test_oval_appears_above_the_triangular_minimum():
    p = derive_params(mu=MU, q1=1.0, A2=0.02, Mb=0.2, T=0.01)
    pt = find_family(p, "L4")
    c = float(zero_velocity_field(p, pt.x, pt.y))
    g = sample_grid(p)
    above = extract_contours(g, c + 1e-4)
    hit = [k for k in above.closed
           if k.bbox[0] <= pt.x <= k.bbox[1] and k.bbox[2] <= pt.y <= k.bbox[3]]
    assert len(hit) == 1
    # the point is a minimum, so nothing encloses it just below its value
    assert enclosing_oval(extract_contours(g, c - 1e-4), (pt.x, pt.y)) is None


@pytest.mark.parametrize("q1, label", [(1.0, YES), (0.5, VERY_SMALL), (0.0, NO)])
@pytest.mark.parametrize("A2", [0.0, 0.02, 0.04])
def test_table_rows(q1, A2, label):
    p = derive_params(mu=MU, q1=q1, A2=A2, Mb=0.2, T=0.01, cd=1e4)
    assert oval_classification(p) == label


def test_oval_results_carry_geometry():
    p = derive_params(mu=MU, A2=0.02, Mb=0.2)
    res = classify_ovals(p)
    l4, l5 = res["L4"], res["L5"]
    assert l4.label == YES
    assert l4.large_area > l4.small_area > 0.0
    assert l4.centroid[1] == pytest.approx(-l5.centroid[1], abs=1e-8)
    assert l4.jacobi == pytest.approx(l5.jacobi, abs=1e-12)


def test_massless_limit_has_no_triangular_ovals():
    # the L4/L5 families collapse into the belt centre, far from the unit ring
    res = classify_ovals(derive_params(mu=MU, q1=0.0, A2=0.02, Mb=0.2, cd=1e4))
    for r in res.values():
        assert r.label == NO and r.centroid is None
        if r.point is not None:
            assert math.hypot(r.point[0] + MU, r.point[1]) < 0.2


@pytest.fixture(scope="module")
def table_400():
    return table1(nx=400)


def test_table_frames(table_400):
    labels = {(f["frame"], f["column"]): f["label"] for f in table_400}
    assert [labels["A", c] for c in ("I", "II", "III")] == [NO] * 3
    assert [labels["B", c] for c in ("I", "II", "III")] == [VERY_SMALL] * 3
    assert [labels["C", c] for c in ("I", "II", "III")] == [YES] * 3
    d = [f for f in table_400 if f["frame"] == "D"]
    assert [f["Mb"] for f in d] == [0.25, 0.5, 0.75]
    assert all(f["label"] != NO for f in d)
    cents = [f["L4"].centroid for f in d]
    for i in range(3):
        for j in range(i + 1, 3):
            assert math.dist(cents[i], cents[j]) > 1e-3


def test_table_is_stable_under_grid_doubling(table_400):
    coarse = table1(nx=200)
    assert [f["label"] for f in coarse] == [f["label"] for f in table_400]


def test_table_threads_do_not_change_result(table_400):
    threaded = table1(nx=400, workers=4)
    assert [f["label"] for f in threaded] == [f["label"] for f in table_400]


# ---------------------------------------------------------------- export

def test_csv_and_svg_export(classical):
    g = sample_grid(classical, nx=100)
    cs = extract_contours(g, 3.2)
    text = contours_to_csv(cs)
    lines = text.split("\r\n")
    assert lines[0] == "component,closed,x,y"
    assert len(lines) - 2 == sum(len(c.points) for c in cs.components)
    svg = contours_to_svg([cs], DEFAULT_BBOX, classical.primaries, [("L4", 0.475, 0.866)])
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert "L4" in svg
