"""
Linear (Lyapunov) stability of equilibrium points.

The flow is linearised by central differences of the full right-hand side,
the characteristic quartic is formed from the variational matrix (and, for
comparison, from closed-form coefficient expressions), solved with Ferrari's
resolvent-cubic method and classified by the largest real part.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from .equilibria import EquilibriumPoint
from .model import derive_params, rhs

EPS = 1e-9
FD_STEP = 1e-6

STABLE, MARGINAL, UNSTABLE = "stable", "marginal", "unstable"


@dataclass(frozen=True)
class QuarticCoeffs:
    """Monic quartic ``l**4 + a l**3 + b l**2 + c l + d``."""

    a: float
    b: float
    c: float
    d: float
    e: float | None = None
    fstar: float | None = None
    source: str = "matrix"

    def as_tuple(self):
        return self.a, self.b, self.c, self.d

    def __call__(self, lam):
        return (((lam + self.a) * lam + self.b) * lam + self.c) * lam + self.d


# ---------------------------------------------------------------- linearisation

def _jacobian(p, state, h):
    # differences are formed in extended precision; the stencil itself is unchanged
    state = np.asarray(state, dtype=np.longdouble)
    h = np.longdouble(h)
    jac = np.empty((4, 4))
    for k in range(4):
        dp = state.copy()
        dm = state.copy()
        dp[k] += h
        dm[k] -= h
        jac[:, k] = (rhs(p, dp) - rhs(p, dm)) / (2 * h)
    return jac


def linearize(p, eq, step=FD_STEP):
    """
    Variational matrix at an equilibrium (zero velocity).

    Acceleration rows come from central differences of :func:`rhs`; the
    kinematic rows ``[0 | I]`` are set exactly.
    """
    state = np.array([eq.x, eq.y, 0.0, 0.0])
    M = _jacobian(p, state, step)
    M[:2, :2] = 0.0
    M[:2, 2:] = np.eye(2)
    return M


def richardson_matrix(p, eq, step=FD_STEP):
    """Richardson-extrapolated variational matrix (steps ``h`` and ``h/2``)."""
    coarse = linearize(p, eq, step)
    fine = linearize(p, eq, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def matrix_coefficients(M):
    """
    Characteristic polynomial of ``M = [[0, I], [A, B]]``.

    Expands ``det(l**2 I - l B - A)`` directly so the structural zero and
    identity blocks contribute no rounding.
    """
    A = M[2:, :2]
    B = M[2:, 2:]
    a11, a12, a21, a22 = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    b11, b12, b21, b22 = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
    return QuarticCoeffs(
        a=float(-(b11 + b22)),
        b=float(b11 * b22 - a11 - a22 - b12 * b21),
        c=float(a11 * b22 + a22 * b11 - b12 * a21 - a12 * b21),
        d=float(a11 * a22 - a12 * a21),
        source="matrix",
    )


def paper_coefficients(p, eq):
    """
    Closed-form quartic coefficients at an equilibrium, evaluated literally.

    ``c = -a (1 + e)`` and ``d`` carry the drag couplings; ``fstar`` collects the
    radial stiffness.  Nothing is re-derived here, so away from the
    classical limit these differ from :func:`matrix_coefficients`; the
    difference is reported, never used for classification.
    """
    mu, q1, A2, Mb, T, W1, n = p.mu, p.q1, p.A2, p.Mb, p.T, p.W1, p.n
    x, y = eq.x, eq.y
    r1, r2 = math.hypot(x + mu, y), math.hypot(x + mu - 1.0, y)
    rsq = x * x + y * y
    if r1 == 0.0 or r2 == 0.0:
        raise ZeroDivisionError("equilibrium coincides with a primary")
    if W1 > 0.0 and y == 0.0:
        raise ZeroDivisionError("drag coefficients need an off-axis point")
    belt5 = (rsq + T * T) ** 2.5
    oblate = 1.0 + 5.0 * A2 / (2.0 * r2 * r2)
    n2 = n * n

    fstar = (1.0 - mu) * q1 / r1**3 + mu / r2**3 * (1.0 + 1.5 * A2 / r2**2) + 3.0 * Mb / belt5
    a = 3.0 * W1 / r1**2
    b = 2.0 * n2 - fstar - 3.0 * mu * A2 / r2**5 + 3.0 * Mb * T * T / belt5 + 2.0 * W1**2 / r1**4
    e = (
        mu / r2**5 * A2
        + mu / (r1**2 * r2**5) * oblate * y * y
        + 3.0 * Mb * (mu * mu * y * y / rsq - T * T) / belt5
    )
    c = -a * (1.0 + e)
    d = (
        (n2 - fstar) * (n2 + 2.0 * fstar - 3.0 * mu * A2 / r2**5 + 3.0 * Mb * T * T / belt5)
        + 9.0 * mu * (1.0 - mu) * y * y * (
            q1 / (r1**5 * r2**5)
            + 3.0 * Mb / belt5 * (mu * q1 / r1**5 + (1.0 - mu) * oblate / r2**5)
        )
        - 6.0 * mu * n * W1 * y / r1**4 * (
            ((x + mu) * (x + mu - 1.0) + y * y) / r2**5
            + 3.0 * Mb * (x * (x + mu) + y * y) / belt5
        )
    )
    return QuarticCoeffs(a, b, c, d, e=e, fstar=fstar, source="paper")


# ---------------------------------------------------------------- quartic roots

def _largest_real_cubic_root(b, c, d):
    """Largest real root of ``m**3 + b m**2 + c m + d``, Newton-polished."""
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        s = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + s) ** (1.0 / 3.0), -q / 2.0 + s) if -q / 2.0 + s else 0.0
        v = math.copysign(abs(-q / 2.0 - s) ** (1.0 / 3.0), -q / 2.0 - s) if -q / 2.0 - s else 0.0
        t = u + v
    elif p == 0.0:
        t = 0.0
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
        t = r * math.cos(math.acos(arg) / 3.0)
    m = t - b / 3.0
    for _ in range(4):
        f = ((m + b) * m + c) * m + d
        df = (3.0 * m + 2.0 * b) * m + c
        if df == 0.0:
            break
        step = f / df
        m -= step
        if abs(step) <= 1e-16 * max(1.0, abs(m)):
            break
    return m


def _quadratic_roots(b, c):
    """Roots of ``z**2 + b z + c`` for real ``b, c``; complex pairs are exact conjugates."""
    disc = b * b - 4.0 * c
    if disc < 0.0:
        w = 0.5 * math.sqrt(-disc)
        return complex(-0.5 * b, w), complex(-0.5 * b, -w)
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return 0j, 0j
    return complex(q), complex(c / q)


def scaled_residual(coeffs, lam):
    a, b, c, d = coeffs
    value = abs((((lam + a) * lam + b) * lam + c) * lam + d)
    m = abs(lam)
    # Horner form overflows to inf instead of raising
    scale = (((m + abs(a)) * m + abs(b)) * m + abs(c)) * m + abs(d)
    return value / scale if scale else value


def sort_roots(roots, tol=1e-9):
    """Sort by real part, ties (within ``tol``) broken by imaginary part."""
    roots = sorted((complex(r) for r in roots), key=lambda z: z.real)
    groups, current = [], [roots[0]]
    for z in roots[1:]:
        if abs(z.real - current[-1].real) <= tol * max(1.0, abs(z.real)):
            current.append(z)
        else:
            groups.append(current)
            current = [z]
    groups.append(current)
    return [z for g in groups for z in sorted(g, key=lambda w: w.imag)]


def _polish(coeffs, lam):
    a, b, c, d = coeffs
    for _ in range(3):
        f = (((lam + a) * lam + b) * lam + c) * lam + d
        df = ((4.0 * lam + 3.0 * a) * lam + 2.0 * b) * lam + c
        candidates = []
        if df != 0:
            candidates.append(lam - f / df)
        if abs(lam) < 1e-8:
            # roots at roundoff level: Newton cancels d against c*lam, this form does not
            tail = ((lam + a) * lam + b) * lam + c
            if tail != 0 and abs(d / tail) < 1e-8:
                candidates.append(-d / tail)
        if not candidates:
            break
        new = min(candidates, key=lambda z: scaled_residual(coeffs, z))
        if scaled_residual(coeffs, new) >= scaled_residual(coeffs, lam):
            break
        lam = new
    return lam


def _biquadratic(p, r):
    ys = []
    for z in _quadratic_roots(p, r):
        w = cmath.sqrt(z)
        ys += [w, -w]
    return ys


def ferrari_roots(a, b, c, d):
    """Unsorted roots of the monic quartic by the resolvent-cubic construction."""
    shift = a / 4.0
    p = b - 3.0 * a * a / 8.0
    q = c - a * b / 2.0 + a**3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a**4 / 256.0
    scale = max(1.0, abs(p), abs(r) ** 0.5)
    if abs(q) <= 1e-14 * scale**1.5:
        ys = _biquadratic(p, r)
    else:
        # y^4 + p y^2 + q y + r = (y^2 + p/2 + m)^2 - 2m (y - q/(4m))^2
        m = _largest_real_cubic_root(p, p * p / 4.0 - r, -q * q / 8.0)
        s = math.sqrt(2.0 * m) if m > 0 else 0.0
        if s == 0.0:
            ys = _biquadratic(p, r)
        else:
            ys = [*_quadratic_roots(-s, p / 2.0 + m + q / (2.0 * s)),
                  *_quadratic_roots(s, p / 2.0 + m - q / (2.0 * s))]
    return [y - shift for y in ys]


def solve_quartic(q, tol=1e-10):
    """
    Four complex roots of ``l**4 + a l**3 + b l**2 + c l + d``, canonically sorted.

    Ferrari roots are Newton-polished on the original polynomial; if any root
    still has a scaled residual above ``tol`` (near-degenerate cases) the
    companion-matrix eigenvalues are used instead.
    """
    coeffs = q.as_tuple() if isinstance(q, QuarticCoeffs) else tuple(float(v) for v in q)
    if not all(math.isfinite(v) for v in coeffs):
        raise ValueError(f"non-finite quartic coefficients {coeffs}")
    roots = [_polish(coeffs, lam) for lam in ferrari_roots(*coeffs)]
    if max(scaled_residual(coeffs, lam) for lam in roots) > tol:
        roots = list(companion_roots(coeffs))
    return sort_roots(roots)


def companion_roots(coeffs):
    a, b, c, d = coeffs
    C = np.zeros((4, 4))
    C[0, :] = [-a, -b, -c, -d]
    C[1:, :3] = np.eye(3)
    return np.linalg.eigvals(C)


def paper_ferrari_roots(q):
    """
    Root layout written with the auxiliary ``alpha1`` and the blocks ``B1, B2``.

    Kept for comparison with :func:`solve_quartic`; it needs ``q.e`` and is
    undefined when ``b**2 = 4 d``.
    """
    a, b, d, e = q.a, q.b, q.d, q.e
    alpha1 = ((1.0 + e) * (1.0 + e * e - b) + d) / (2.0 * (b * b - 4.0 * d))
    root = cmath.sqrt(1.0 + 8.0 * alpha1)
    common = b / 2.0 + alpha1 * a * a
    B1 = common * (1.0 + root) - (1.0 + e) / root
    B2 = common * (1.0 - root) + (1.0 + e) / root
    out = []
    for sgn, B in ((1.0, B1), (-1.0, B2)):
        centre = -a * (1.0 + sgn * root) / 4.0
        spread = cmath.sqrt(a * a * (1.0 + sgn * root) / 16.0 - B)
        out += [centre + spread, centre - spread]
    return sort_roots(out)


# ---------------------------------------------------------------- classification

def max_real_part(roots):
    return max(complex(z).real for z in roots)


def classify(roots, eps=EPS):
    """``unstable`` if any Re > eps, ``stable`` if all Re < -eps, else ``marginal``."""
    m = max_real_part(roots)
    if m > eps:
        return UNSTABLE
    if m < -eps:
        return STABLE
    return MARGINAL


def routh_critical_mass():
    """Closed form ``(1 - sqrt(23/27)) / 2``."""
    return 0.5 * (1.0 - math.sqrt(23.0 / 27.0))


def _classical_l4(mu):
    return EquilibriumPoint(0.5 - mu, math.sqrt(3.0) / 2.0, "L4", 0.0)


def routh_boundary(lo=0.01, hi=0.1, tol=1e-12):
    """
    Bisect on ``mu`` for the marginal/unstable transition of classical L4.

    Uses the closed-form quartic at the exact classical triangular point.
    """
    def unstable(mu):
        p = derive_params(mu=mu)
        roots = solve_quartic(paper_coefficients(p, _classical_l4(mu)))
        return classify(roots) == UNSTABLE

    if unstable(lo) or not unstable(hi):
        raise ValueError(f"bracket [{lo}, {hi}] does not straddle the transition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- reports

@dataclass
class StabilityReport:
    point: EquilibriumPoint
    matrix: np.ndarray
    roots: list
    max_re: float
    stability: str
    coeffs_matrix: QuarticCoeffs
    coeffs_paper: QuarticCoeffs | None
    coeff_discrepancy: float

    def to_dict(self):
        def coeffs(q):
            if q is None:
                return None
            return {"a": q.a, "b": q.b, "c": q.c, "d": q.d, "e": q.e, "fstar": q.fstar,
                    "source": q.source}
        return {
            "family": self.point.family,
            "x": self.point.x,
            "y": self.point.y,
            "residual": self.point.residual,
            "class": self.stability,
            "max_re": self.max_re,
            "roots": [[z.real, z.imag] for z in self.roots],
            "coeffs_matrix": coeffs(self.coeffs_matrix),
            "coeffs_paper": coeffs(self.coeffs_paper),
            # NaN (no closed-form coefficients) is not valid JSON
            "coeff_discrepancy": None if math.isnan(self.coeff_discrepancy) else self.coeff_discrepancy,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def stability_report(p, eq):
    """Linearise, solve and classify; matrix coefficients decide the class."""
    M = linearize(p, eq)
    qm = matrix_coefficients(M)
    try:
        qp = paper_coefficients(p, eq)
        discrepancy = max(abs(u - v) for u, v in zip(qm.as_tuple(), qp.as_tuple()))
    except ZeroDivisionError:
        qp, discrepancy = None, float("nan")
    roots = solve_quartic(qm)
    return StabilityReport(
        point=eq, matrix=M, roots=roots, max_re=max_real_part(roots),
        stability=classify(roots), coeffs_matrix=qm, coeffs_paper=qp,
        coeff_discrepancy=discrepancy,
    )


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2)
