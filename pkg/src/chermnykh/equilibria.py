"""
Equilibrium points as numerical zeros of the static force field.

Seeds come from approximate position series (triangular family) and from
on-axis roots of the drag-free field (collinear family); each seed is polished
by a damped Newton iteration with a finite-difference Jacobian.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import GUARD_RADIUS, conservative_gradient, static_gradient

FAMILIES = ("L1", "L2", "L3", "L4", "L5")

RESIDUAL_TOL = 1e-11
MAX_ITERATIONS = 100
MAX_HALVINGS = 20
JACOBIAN_STEP = 1e-7


class ConvergenceError(RuntimeError):
    """Newton refinement failed for one equilibrium family."""

    def __init__(self, family, message):
        self.family = family
        super().__init__(f"{family}: {message}")


@dataclass(frozen=True)
class EquilibriumPoint:
    x: float
    y: float
    family: str
    residual: float
    seed_kind: str = "classical"
    iterations: int = 0

    @property
    def position(self):
        return self.x, self.y

    def distances(self, p):
        return math.hypot(self.x + p.mu, self.y), math.hypot(self.x + p.mu - 1.0, self.y)


@dataclass(frozen=True)
class Seed:
    x: float
    y: float
    family: str
    kind: str


def _classical_axis_gradient(mu, x):
    r1 = abs(x + mu)
    r2 = abs(x + mu - 1.0)
    return x - (1.0 - mu) * (x + mu) / r1**3 - mu * (x + mu - 1.0) / r2**3


def classical_points(mu):
    """Lagrange points of the unperturbed problem, ordered L1..L5."""
    g = GUARD_RADIUS * 10
    f = lambda x: _classical_axis_gradient(mu, x)  # noqa: E731
    l1 = brentq(f, -mu + g, 1.0 - mu - g, xtol=1e-15, rtol=1e-15)
    l2 = brentq(f, 1.0 - mu + g, 2.0, xtol=1e-15, rtol=1e-15)
    l3 = brentq(f, -2.0, -mu - g, xtol=1e-15, rtol=1e-15)
    h = math.sqrt(3.0) / 2.0
    return [(l1, 0.0), (l2, 0.0), (l3, 0.0), (0.5 - mu, h), (0.5 - mu, -h)]


def _axis_roots(p, lo, hi, samples=4000):
    """All sign changes of the drag-free axial force on (lo, hi)."""
    # cluster samples towards both ends, where the primaries sit
    u = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, samples))
    xs = lo + (hi - lo) * u
    gx, _ = conservative_gradient(p, xs, np.zeros_like(xs))
    f = lambda x: float(conservative_gradient(p, x, 0.0)[0])  # noqa: E731
    roots = []
    for i in np.nonzero(np.sign(gx[:-1]) * np.sign(gx[1:]) < 0)[0]:
        a, b = xs[i], xs[i + 1]
        # a sign flip across a pole is not a root
        if abs(gx[i]) > 1e6 or abs(gx[i + 1]) > 1e6:
            continue
        roots.append(brentq(f, a, b, xtol=1e-15, rtol=1e-15))
    return roots


def collinear_seeds(p):
    """
    On-axis zeros of the drag-free static field, one per collinear family.

    Where an interval holds several zeros the one nearest the classical point
    of that family is used; if none exists the classical point is returned.
    """
    mu = p.mu
    g = 1e-6
    classical = classical_points(mu)
    intervals = {
        "L1": (-mu + g, 1.0 - mu - g),
        "L2": (1.0 - mu + g, 4.0),
        "L3": (-4.0, -mu - g),
    }
    seeds = []
    for family, (lo, hi), (cx, _) in zip(FAMILIES[:3], intervals.values(), classical):
        roots = _axis_roots(p, lo, hi)
        if roots:
            x = min(roots, key=lambda r: abs(r - cx))
            seeds.append(Seed(x, 0.0, family, "classical"))
        else:
            seeds.append(Seed(cx, 0.0, family, "classical"))
    return seeds


def triangular_series(p, y0):
    """
    Approximate triangular point ``(x, y)`` for the branch with height sign of ``y0``.

    ``y0`` is the previous estimate of the height that enters the drag
    corrections. Returns ``None`` when a term is undefined.
    """
    mu, A2, Mb, W1, n = p.mu, p.A2, p.Mb, p.W1, p.n
    q23 = p.q1 ** (2.0 / 3.0)
    belt = (1.0 - 2.0 * p.rc) * Mb / (3.0 * (p.rc**2 + p.T**2) ** 1.5)
    if W1 and y0 == 0.0:
        return None
    drag = n * W1 / y0 if W1 else 0.0
    x = (
        -mu
        + 0.5 * q23 * (1.0 - A2)
        - drag * (mu * q23 - 2.0 * (1.0 - mu)) / (6.0 * mu * (1.0 - mu))
        + belt * ((1.0 - 3.0 * mu * A2 / (1.0 - mu)) * q23 - 1.0)
    )
    bracket = (
        4.0
        - q23
        + 2.0 * (q23 - 2.0) * A2
        - 2.0 * drag * (q23 - 2.0) / (3.0 * mu * (1.0 - mu))
        # (2 rc - 1) = -(1 - 2 rc): sign folded into `belt`
        + 4.0 * belt * ((q23 - 3.0) - 1.5 * mu * A2 * (q23 - 3.0) / (1.0 - mu))
    )
    if not bracket > 0.0 or q23 == 0.0:
        return None
    # prefactor q1**(1/3)/2: reproduces the exact photogravitational height
    y = math.copysign(0.5 * p.q1 ** (1.0 / 3.0) * math.sqrt(bracket), y0)
    return x, y


def triangular_seeds(p):
    """L4/L5 seeds from the series, iterated once on the height; classical fallback."""
    seeds = []
    h = math.sqrt(3.0) / 2.0
    for family, sign in (("L4", 1.0), ("L5", -1.0)):
        y0 = sign * h * p.q1 ** (1.0 / 3.0)
        first = triangular_series(p, y0)
        second = triangular_series(p, first[1]) if first else None
        if second is None:
            seeds.append(Seed(0.5 - p.mu, sign * h, family, "classical"))
        else:
            seeds.append(Seed(second[0], second[1], family, "paper-series"))
    return seeds


def seed_points(p, mode="paper"):
    """
    Five starting points ordered L1..L5.

    ``mode="classical"`` replaces the triangular series by the classical
    positions ``(1/2 - mu, +-sqrt(3)/2)``.
    """
    if mode not in ("paper", "classical"):
        raise ValueError(f"unknown seed mode {mode!r}")
    seeds = collinear_seeds(p)
    if mode == "paper":
        seeds += triangular_seeds(p)
    else:
        h = math.sqrt(3.0) / 2.0
        seeds += [Seed(0.5 - p.mu, h, "L4", "classical"), Seed(0.5 - p.mu, -h, "L5", "classical")]
    return seeds


def _polar_field(p, r, th):
    """Static field at polar position ``(r, th)`` about the larger primary.

    Returns the radial and tangential components, the Cartesian point and the
    Cartesian max-norm residual.
    """
    c, s = math.cos(th), math.sin(th)
    x, y = -p.mu + r * c, r * s
    gx, gy = static_gradient(p, x, y)
    return np.array([gx * c + gy * s, gy * c - gx * s]), x, y, max(abs(gx), abs(gy))


def _polar_jacobian(p, r, th, h=JACOBIAN_STEP):
    jac = np.empty((2, 2))
    for j, (dr, dt) in enumerate(((h, 0.0), (0.0, h))):
        plus = _polar_field(p, r + dr, th + dt)[0]
        minus = _polar_field(p, r - dr, th - dt)[0]
        jac[:, j] = (plus - minus) / (2.0 * h)
    return jac


def _near_primary(p, x, y, radius):
    return math.hypot(x + p.mu, y) < radius or math.hypot(x + p.mu - 1.0, y) < radius


def refine(p, seed, family=None, tol=RESIDUAL_TOL, max_iter=MAX_ITERATIONS):
    """
    Damped Newton iteration on the static field, starting at ``seed``.

    ``seed`` is a :class:`Seed` or an ``(x, y)`` pair (then ``family`` is
    required or taken as the nearest classical point).  Iteration stops once
    the max-norm of the Cartesian field is below ``tol``.  Steps are halved up
    to 20 times while neither that residual nor the Newton-scaled residual
    ``|J^-1 G|`` decreases.

    Notes
    -----
    The unknowns are polar coordinates about the larger primary.  For small
    mu the equilibria sit on the ring ``r1 ~ q1**(1/3)`` where the field along
    the ring is of order mu while across it is of order one; a Cartesian step
    along the ring leaves the ring at second order and the line search then
    stalls.  In polar form that curvature disappears.
    """
    if isinstance(seed, Seed):
        x, y, kind = seed.x, seed.y, seed.kind
        family = family or seed.family
    else:
        (x, y), kind = seed, "classical"
    if family is None:
        family = nearest_family(p.mu, x, y)
    if _near_primary(p, x, y, GUARD_RADIUS):
        raise ConvergenceError(family, "seed lies inside a primary guard radius")

    r, th = math.hypot(x + p.mu, y), math.atan2(y, x + p.mu)
    gx, gy = static_gradient(p, x, y)
    res = max(abs(gx), abs(gy))
    g = None
    iterations = 0
    while res >= tol:
        if iterations >= max_iter:
            raise ConvergenceError(family, f"no convergence after {max_iter} iterations (residual {res:.3e})")
        iterations += 1
        if g is None:
            g = _polar_field(p, r, th)[0]
        jac = _polar_jacobian(p, r, th)
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            raise ConvergenceError(family, "singular Jacobian") from None
        size = np.max(np.abs(step))
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            rn, thn = r + t * step[0], th + t * step[1]
            if rn > 0.0:
                g_n, xn, yn, res_n = _polar_field(p, rn, thn)
                if not _near_primary(p, xn, yn, GUARD_RADIUS) and (
                    res_n < res or np.max(np.abs(np.linalg.solve(jac, g_n))) < (1.0 - 0.25 * t) * size
                ):
                    break
            t *= 0.5
        else:
            if res < 1e3 * tol:
                # roundoff floor reached just above tol
                break
            raise ConvergenceError(family, f"line search failed (residual {res:.3e})")
        r, th, x, y, res, g = rn, thn, xn, yn, res_n, g_n

    if _near_primary(p, x, y, 1e-6):
        raise ConvergenceError(family, "converged onto a primary")
    return EquilibriumPoint(float(x), float(y), family, float(res), kind, iterations)


def nearest_family(mu, x, y):
    pts = classical_points(mu)
    dist = [math.hypot(x - cx, y - cy) for cx, cy in pts]
    return FAMILIES[int(np.argmin(dist))]


def find_all(p, mode="paper"):
    """
    The five equilibrium points L1..L5.

    Raises :class:`ConvergenceError` (carrying the family) if any refinement
    fails or two families converge onto the same point.
    """
    points = [refine(p, s) for s in seed_points(p, mode)]
    for i, a in enumerate(points):
        for b in points[i + 1:]:
            if math.hypot(a.x - b.x, a.y - b.y) < 1e-8:
                raise ConvergenceError(b.family, f"coincides with {a.family}")
    return points


def find_family(p, family, mode="paper"):
    """Refine a single family; cheaper than :func:`find_all` for L4/L5 work."""
    idx = FAMILIES.index(family)
    if idx >= 3:
        seeds = triangular_seeds(p) if mode == "paper" else seed_points(p, mode)[3:]
        return refine(p, seeds[idx - 3])
    return refine(p, collinear_seeds(p)[idx])


TABLE_FIELDS = ("family", "x", "y", "residual", "iterations")


def to_rows(points, extra=None):
    rows = []
    for i, pt in enumerate(points):
        row = {k: getattr(pt, k) for k in TABLE_FIELDS}
        if extra:
            row.update(extra[i])
        rows.append(row)
    return rows


def to_csv(points, extra=None):
    """CSV table with columns family, x, y, residual, iterations (+extra columns)."""
    rows = to_rows(points, extra)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def to_json(points, extra=None):
    return json.dumps(to_rows(points, extra), indent=2)

