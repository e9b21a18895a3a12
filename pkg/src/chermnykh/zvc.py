"""
Zero-velocity curves ``C = 2 Omega(x, y)`` and the oval classification of the
triangular points.

The field is sampled on a uniform grid, contoured with marching squares, and
each triangular point is tested for a closed oval of the forbidden region
(``2 Omega < C``) around it.  Triangular points are local minima of
``2 Omega``, so ovals appear at levels slightly *above* the point's value.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import equilibria
from .model import GUARD_RADIUS, conservative_potential, drag_angle, derive_params

DEFAULT_BBOX = (-1.6, 1.6, -1.6, 1.6)

# Oval persistence offsets above the point's Jacobi value.
SMALL_OFFSET = 4e-3
LARGE_OFFSET = 0.048

YES, VERY_SMALL, NO = "yes", "very-small", "no"


@dataclass(frozen=True)
class FieldGrid:
    """
    ``values[j, i]`` holds 2 Omega at ``(xs[i], ys[j])``; ``mask[j, i]`` flags
    the cell spanned by nodes ``(j..j+1, i..i+1)`` as unusable.
    """

    bbox: tuple
    nx: int
    ny: int
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    @property
    def spacing(self):
        return self.xs[1] - self.xs[0], self.ys[1] - self.ys[0]


@dataclass
class Component:
    points: np.ndarray  # (k, 2); closed components repeat the first vertex
    closed: bool

    @property
    def bbox(self):
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    @property
    def area(self):
        """Unsigned shoelace area (0 for open components)."""
        if not self.closed:
            return 0.0
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * abs(float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1])))

    @property
    def centroid(self):
        x, y = self.points[:-1, 0], self.points[:-1, 1]
        return float(x.mean()), float(y.mean())

    def contains(self, px, py):
        """Even-odd point-in-polygon test; False for open components."""
        if not self.closed:
            return False
        x, y = self.points[:-1, 0], self.points[:-1, 1]
        xj, yj = np.roll(x, 1), np.roll(y, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = ((y > py) != (yj > py)) & (px < (xj - x) * (py - y) / (yj - y) + x)
        return bool(np.count_nonzero(cross) % 2)


@dataclass
class ContourSet:
    level: float
    components: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.components)

    @property
    def closed(self):
        return [c for c in self.components if c.closed]


def zero_velocity_field(p, x, y):
    """2 Omega at rest, angular drag term on its principal branch."""
    values = 2.0 * conservative_potential(p, x, y)
    if p.W1:
        values = values - 2.0 * p.n * p.W1 * drag_angle(p, x, y)
    return values


def sample_grid(p, bbox=DEFAULT_BBOX, nx=400, ny=None):
    """
    Evaluate 2 Omega at zero velocity on an ``nx`` by ``ny`` node grid.

    Cells containing a primary, touching a non-finite node, or (under drag)
    straddling the angle cut ``y = 0, x < -mu`` are masked.
    """
    ny = nx if ny is None else ny
    xmin, xmax, ymin, ymax = bbox
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"degenerate bbox {bbox}")
    if nx < 16 or ny < 16:
        raise ValueError("grid needs at least 16 nodes per axis")
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    X, Y = np.meshgrid(xs, ys)
    r1 = np.hypot(X + p.mu, Y)
    r2 = np.hypot(X + p.mu - 1.0, Y)
    bad = (r1 <= GUARD_RADIUS) | (r2 <= GUARD_RADIUS)
    Xs, Ys = np.where(bad, 10.0, X), np.where(bad, 10.0, Y)
    values = zero_velocity_field(p, Xs, Ys)
    values[bad] = np.nan

    node_bad = ~np.isfinite(values)
    mask = node_bad[:-1, :-1] | node_bad[1:, :-1] | node_bad[:-1, 1:] | node_bad[1:, 1:]
    for px, py in p.primaries:
        i = np.searchsorted(xs, px) - 1
        j = np.searchsorted(ys, py) - 1
        if 0 <= i < nx - 1 and 0 <= j < ny - 1:
            mask[j, i] = True
            # primary on a grid line: block both neighbours
            if xs[i + 1] == px and i + 1 < nx - 1:
                mask[j, i + 1] = True
            if ys[j + 1] == py and j + 1 < ny - 1:
                mask[j + 1, i] = True
    if p.W1:
        straddle = (ys[:-1] <= 0.0) & (ys[1:] >= 0.0)
        left = xs[:-1] < -p.mu
        mask |= straddle[:, None] & left[None, :]
    return FieldGrid(tuple(bbox), nx, ny, xs, ys, values, mask)


# corners: 0=(j,i) 1=(j,i+1) 2=(j+1,i+1) 3=(j+1,i); edges: 0 bottom, 1 right, 2 top, 3 left
_SEGMENTS = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),),
    6: ((0, 2),), 7: ((3, 2),), 8: ((2, 3),), 9: ((2, 0),),
    11: ((2, 1),), 12: ((1, 3),), 13: ((1, 0),), 14: ((0, 3),),
}
# saddles: center above level joins the high corners' regions
_SADDLE = {
    5: {True: ((0, 1), (2, 3)), False: ((3, 0), (1, 2))},
    10: {True: ((3, 0), (1, 2)), False: ((0, 1), (2, 3))},
}


def _edge_key(j, i, e):
    if e == 0:
        return ("h", j, i)
    if e == 2:
        return ("h", j + 1, i)
    if e == 3:
        return ("v", j, i)
    return ("v", j, i + 1)


def extract_contours(g, level):
    """
    Marching squares level set of ``g.values`` at ``level``.

    Vertices are linear interpolations along cell edges; ambiguous saddle cells
    are resolved by the mean of the four corners.  Segments are stitched into
    polylines, closed ones ending on their first vertex.  A level outside the
    sampled range gives an empty set.
    """
    v = g.values
    cs = ContourSet(level=float(level))
    if not np.isfinite(level):
        raise ValueError("level must be finite")
    finite = v[np.isfinite(v)]
    if finite.size == 0 or level < finite.min() or level > finite.max():
        return cs

    above = v > level
    idx = (
        above[:-1, :-1].astype(np.uint8)
        | (above[:-1, 1:].astype(np.uint8) << 1)
        | (above[1:, 1:].astype(np.uint8) << 2)
        | (above[1:, :-1].astype(np.uint8) << 3)
    )
    active = (idx != 0) & (idx != 15) & ~g.mask
    js, is_ = np.nonzero(active)

    xs, ys = g.xs, g.ys
    vertex = {}

    def point(key):
        pt = vertex.get(key)
        if pt is None:
            kind, j, i = key
            if kind == "h":
                a, b = v[j, i], v[j, i + 1]
                t = (level - a) / (b - a)
                pt = (xs[i] + t * (xs[i + 1] - xs[i]), ys[j])
            else:
                a, b = v[j, i], v[j + 1, i]
                t = (level - a) / (b - a)
                pt = (xs[i], ys[j] + t * (ys[j + 1] - ys[j]))
            vertex[key] = pt
        return pt

    links = {}
    for j, i in zip(js.tolist(), is_.tolist()):
        case = int(idx[j, i])
        if case in _SADDLE:
            center = 0.25 * (v[j, i] + v[j, i + 1] + v[j + 1, i + 1] + v[j + 1, i])
            segs = _SADDLE[case][bool(center > level)]
        else:
            segs = _SEGMENTS[case]
        for e0, e1 in segs:
            a, b = _edge_key(j, i, e0), _edge_key(j, i, e1)
            links.setdefault(a, []).append(b)
            links.setdefault(b, []).append(a)

    seen = set()

    def walk(start):
        # every edge vertex has degree <= 2
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = next((k for k in links[cur] if k != prev), None)
            if nxt is None:
                return chain, False
            if nxt == start:
                chain.append(start)
                return chain, True
            if nxt in seen:
                return chain, False
            seen.add(nxt)
            chain.append(nxt)
            prev, cur = cur, nxt

    # open chains first: start from endpoints (degree 1)
    for key in sorted(links):
        if key not in seen and len(links[key]) == 1:
            chain, _ = walk(key)
            cs.components.append(Component(np.array([point(k) for k in chain]), False))
    for key in sorted(links):
        if key not in seen:
            chain, closed = walk(key)
            cs.components.append(Component(np.array([point(k) for k in chain]), closed))
    return cs


def enclosing_oval(cs, point, exclude=()):
    """
    Smallest closed component enclosing ``point`` and none of ``exclude``.
    """
    best = None
    for comp in cs.closed:
        if not comp.contains(*point):
            continue
        if any(comp.contains(*q) for q in exclude):
            continue
        if best is None or comp.area < best.area:
            best = comp
    return best


def _is_local_minimum(p, x, y, h=1e-4):
    """Positive-definite finite-difference Hessian of 2 Omega at (x, y)."""
    f = lambda a, b: float(zero_velocity_field(p, a, b))  # noqa: E731
    c = f(x, y)
    fxx = (f(x + h, y) - 2 * c + f(x - h, y)) / h**2
    fyy = (f(x, y + h) - 2 * c + f(x, y - h)) / h**2
    fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h)
    return fxx > 0 and fxx * fyy - fxy * fxy > 0


def _triangular_pair(p):
    """Refined L4 and L5, or ``None`` for a family that is not a genuine triangular minimum."""
    pts = {}
    for family in ("L4", "L5"):
        try:
            pts[family] = equilibria.find_family(p, family)
        except equilibria.ConvergenceError:
            pts[family] = None
    l4, l5 = pts["L4"], pts["L5"]
    if l4 and l5 and math.hypot(l4.x - l5.x, l4.y - l5.y) < 1e-6:
        pts = {"L4": None, "L5": None}
    for family, sign in (("L4", 1.0), ("L5", -1.0)):
        pt = pts[family]
        if pt is not None and (pt.y * sign <= 0 or not _is_local_minimum(p, pt.x, pt.y)):
            pts[family] = None
    return pts


@dataclass
class OvalResult:
    family: str
    label: str
    point: tuple | None
    jacobi: float | None
    small_area: float = 0.0
    large_area: float = 0.0
    centroid: tuple | None = None


def classify_ovals(p, bbox=DEFAULT_BBOX, nx=400, small=SMALL_OFFSET, large=LARGE_OFFSET,
                   grid=None):
    """
    Oval classification for L4 and L5.

    ``yes``: a closed oval around the point (excluding its mirror partner)
    persists up to the level ``C + large``; ``very-small``: it exists at
    ``C + small`` only; ``no``: no oval at ``C + small`` or no triangular
    minimum exists at all.
    """
    g = grid if grid is not None else sample_grid(p, bbox, nx)
    pts = _triangular_pair(p)
    results = {}
    for family, other in (("L4", "L5"), ("L5", "L4")):
        pt = pts[family]
        if pt is None:
            results[family] = OvalResult(family, NO, None, None)
            continue
        partner = pts[other]
        exclude = [(partner.x, partner.y)] if partner else []
        c = float(zero_velocity_field(p, pt.x, pt.y))
        res = OvalResult(family, NO, (pt.x, pt.y), c)
        oval = enclosing_oval(extract_contours(g, c + small), (pt.x, pt.y), exclude)
        if oval is not None:
            res.small_area = oval.area
            res.centroid = oval.centroid
            res.label = VERY_SMALL
            big = enclosing_oval(extract_contours(g, c + large), (pt.x, pt.y), exclude)
            if big is not None:
                res.large_area = big.area
                res.label = YES
        results[family] = res
    return results


def oval_classification(p, **kwargs):
    """Single label for the triangular pair (the weaker of L4 and L5)."""
    results = classify_ovals(p, **kwargs)
    order = {NO: 0, VERY_SMALL: 1, YES: 2}
    return min((r.label for r in results.values()), key=order.__getitem__)


TABLE1_ROWS = {"A": 0.0, "B": 0.5, "C": 1.0}
TABLE1_A2 = (0.0, 0.02, 0.04)
TABLE1_D_MB = (0.25, 0.5, 0.75)


def table1(mu=0.025, T=0.01, Mb=0.2, cd=1.0e4, nx=400, bbox=DEFAULT_BBOX,
           small=SMALL_OFFSET, large=LARGE_OFFSET, d_A2=0.02, workers=None):
    """
    Oval classification grid for frames A-C (q1 by row, A2 by column) and the
    belt-mass sequence of frame D (q1=1, A2=d_A2).

    Returns a list of dicts, one per frame, in row-major order.  Frames are
    independent; ``workers > 1`` evaluates them on a thread pool without
    changing the result or its order.
    """
    frames = []
    for row, q1 in TABLE1_ROWS.items():
        for col, A2 in zip(("I", "II", "III"), TABLE1_A2):
            frames.append((row, col, dict(mu=mu, q1=q1, A2=A2, Mb=Mb, T=T, cd=cd)))
    for col, mb in zip(("I", "II", "III"), TABLE1_D_MB):
        frames.append(("D", col, dict(mu=mu, q1=1.0, A2=d_A2, Mb=mb, T=T, cd=cd)))
    order = {NO: 0, VERY_SMALL: 1, YES: 2}

    def run(frame):
        row, col, kw = frame
        res = classify_ovals(derive_params(**kw), bbox=bbox, nx=nx, small=small, large=large)
        labels = [res["L4"].label, res["L5"].label]
        return {
            "frame": row, "column": col, **kw,
            "label": min(labels, key=order.__getitem__),
            "L4": res["L4"], "L5": res["L5"],
        }

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, frames))
    return [run(f) for f in frames]


def contours_to_csv(cs):
    """CSV with columns component, closed, x, y (one row per vertex)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["component", "closed", "x", "y"])
    for k, comp in enumerate(cs.components):
        for x, y in comp.points:
            w.writerow([k, int(comp.closed), repr(float(x)), repr(float(y))])
    return buf.getvalue()


def contours_to_svg(cs_list, bbox, primaries=(), points=(), size=600):
    """
    Standalone SVG of one or more contour sets with primaries (filled discs)
    and equilibria (crosses, labelled).
    """
    if hasattr(cs_list, "components"):
        cs_list = [cs_list]
    xmin, xmax, ymin, ymax = bbox
    sx = size / (xmax - xmin)
    sy = size / (ymax - ymin)

    def tx(x, y):
        return (x - xmin) * sx, (ymax - y) * sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for cs in cs_list:
        for comp in cs.components:
            pts = " ".join("%.3f,%.3f" % tx(x, y) for x, y in comp.points)
            tag = "polygon" if comp.closed else "polyline"
            parts.append(f'<{tag} points="{pts}" fill="none" stroke="black" stroke-width="0.8"/>')
    for x, y in primaries:
        cx, cy = tx(x, y)
        parts.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="4" fill="black"/>')
    for label, x, y in points:
        cx, cy = tx(x, y)
        parts.append(
            f'<path d="M{cx - 4:.3f},{cy - 4:.3f}L{cx + 4:.3f},{cy + 4:.3f}'
            f'M{cx - 4:.3f},{cy + 4:.3f}L{cx + 4:.3f},{cy - 4:.3f}" stroke="red"/>'
        )
        parts.append(f'<text x="{cx + 5:.3f}" y="{cy - 5:.3f}" font-size="11">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
