"""
Parameters and force field of the planar photogravitational Chermnykh problem.

The infinitesimal body moves in the rotating barycentric frame of two primaries:
a radiating body of mass ``1 - mu`` at ``(-mu, 0)`` and an oblate body of mass
``mu`` at ``(1 - mu, 0)``.  A flat belt of mass ``Mb`` centred on the origin
contributes the potential ``-Mb / sqrt(r**2 + T**2)`` and, together with the
oblateness ``A2``, perturbs the mean motion ``n`` of the primaries.  Radiation
reduces the attraction of the first primary by the factor ``q1`` and the
Poynting-Robertson drag enters through ``W1 = (1 - mu)(1 - q1) / cd``.

All field functions accept scalars or numpy arrays (broadcast together).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

GUARD_RADIUS = 1e-9

# Physical constants used only to derive the dimensionless speed of light.
SPEED_OF_LIGHT = 299_792_458.0  # m/s
ASTRONOMICAL_UNIT = 1.495978707e11  # m
SIDEREAL_YEAR = 365.256363004 * 86400.0  # s

SUN_EARTH_MU = 3.00348e-6


class DomainError(ValueError):
    """Raised when a model input lies outside its admissible range."""

    def __init__(self, field, value, requirement):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r} violates {requirement}")


class SingularityError(ArithmeticError):
    """Raised when the field is evaluated inside the guard radius of a primary."""


def dimensionless_light_speed(
    distance=ASTRONOMICAL_UNIT, period=SIDEREAL_YEAR, c=SPEED_OF_LIGHT
):
    """Speed of light in units of distance / (period / 2 pi)."""
    return c * (period / (2.0 * math.pi)) / distance


def mass_reduction_factor(radius, density, efficiency):
    """
    Mass-reduction factor ``q1 = 1 - 5.6e-5 chi / (a rho)`` in C.G.S. units.

    Parameters
    ----------
    radius : float
        Particle radius in cm.
    density : float
        Particle density in g/cm^3.
    efficiency : float
        Radiation pressure efficiency factor.
    """
    if not radius > 0:
        raise DomainError("radius", radius, "radius > 0")
    if not density > 0:
        raise DomainError("density", density, "density > 0")
    if not efficiency >= 0:
        raise DomainError("efficiency", efficiency, "efficiency >= 0")
    q1 = 1.0 - 5.6e-5 * efficiency / (radius * density)
    if not 0.0 <= q1 <= 1.0:
        raise DomainError("q1", q1, "0 <= q1 <= 1 (particle too small for this efficiency)")
    return q1


@dataclass(frozen=True)
class ModelInputs:
    """Raw problem inputs; see :func:`derive_params` for validation."""

    mu: float
    q1: float = 1.0
    A2: float = 0.0
    Mb: float = 0.0
    T: float = 0.01
    cd: float = 1.0e4

    def validate(self):
        checks = (
            ("mu", 0.0 < self.mu <= 0.5, "0 < mu <= 0.5"),
            ("q1", 0.0 <= self.q1 <= 1.0, "0 <= q1 <= 1"),
            ("A2", self.A2 >= 0.0, "A2 >= 0"),
            ("Mb", self.Mb >= 0.0, "Mb >= 0"),
            ("T", self.T >= 0.0, "T >= 0"),
            ("cd", self.cd > 0.0, "cd > 0"),
        )
        for name, ok, requirement in checks:
            value = getattr(self, name)
            if not (ok and math.isfinite(value)):
                raise DomainError(name, value, requirement)
        return self


@dataclass(frozen=True)
class ModelParams:
    mu: float
    q1: float
    A2: float
    Mb: float
    T: float
    cd: float
    W1: float
    rc: float
    n2: float

    @property
    def n(self):
        return math.sqrt(self.n2)

    @property
    def inputs(self):
        return ModelInputs(self.mu, self.q1, self.A2, self.Mb, self.T, self.cd)

    @property
    def is_classical(self):
        """True for the unperturbed restricted problem (q1=1, A2=Mb=0)."""
        return self.q1 == 1.0 and self.A2 == 0.0 and self.Mb == 0.0

    @property
    def primaries(self):
        return (-self.mu, 0.0), (1.0 - self.mu, 0.0)


def derive_params(inputs=None, **kwargs):
    """
    Validate the inputs and compute ``W1``, ``rc`` and the mean motion ``n``.

    Accepts either a :class:`ModelInputs` instance or the same fields as
    keyword arguments.

    >>> derive_params(mu=0.025).n
    1.0
    """
    if inputs is None:
        inputs = ModelInputs(**kwargs)
    elif kwargs:
        raise TypeError("pass either a ModelInputs instance or keyword fields, not both")
    inputs.validate()
    mu, q1 = inputs.mu, inputs.q1
    W1 = (1.0 - mu) * (1.0 - q1) / inputs.cd
    rc = math.sqrt((1.0 - mu) * q1 ** (2.0 / 3.0) + mu * mu)
    n2 = 1.0 + 1.5 * inputs.A2 + 2.0 * inputs.Mb * rc / (rc * rc + inputs.T**2) ** 1.5
    return ModelParams(
        mu=mu, q1=q1, A2=inputs.A2, Mb=inputs.Mb, T=inputs.T, cd=inputs.cd,
        W1=W1, rc=rc, n2=n2,
    )


def sun_earth_inputs(**overrides):
    """Sun-Earth preset: ``mu`` from the solar/terrestrial mass ratio."""
    values = dict(mu=SUN_EARTH_MU, q1=1.0, A2=0.0, Mb=0.0, T=0.01,
                  cd=dimensionless_light_speed())
    values.update(overrides)
    return ModelInputs(**values)


_PRESET_KEYS = {"mu": "mu", "q1": "q1", "a2": "A2", "mb": "Mb", "t": "T", "cd": "cd"}


def parse_preset(text):
    """
    Parse a ``key = value`` preset (keys mu, q1, a2, mb, t, cd; ``#`` comments).

    Returns a dict of :class:`ModelInputs` field names to floats.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.lower() not in _PRESET_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[_PRESET_KEYS[key.lower()]] = float(value)
    return values


def load_preset(path):
    """Load a preset file and return validated :class:`ModelInputs`."""
    values = parse_preset(Path(path).read_text())
    if "mu" not in values:
        raise ValueError(f"{path}: preset must define mu")
    return ModelInputs(**values).validate()


def format_preset(inputs):
    return "".join(
        f"{key} = {getattr(inputs, name)!r}\n" for key, name in _PRESET_KEYS.items()
    )


@dataclass(frozen=True)
class PhaseState:
    """Planar state in the rotating frame; ``t`` is optional."""

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    t: float | None = None

    def as_array(self):
        return np.array([self.x, self.y, self.vx, self.vy], dtype=float)

    @classmethod
    def from_array(cls, arr, t=None):
        x, y, vx, vy = (float(v) for v in arr)
        return cls(x, y, vx, vy, t)


def distances(p, x, y):
    """Distances ``(r1, r2)`` to the first and second primary."""
    r1 = np.hypot(x + p.mu, y)
    r2 = np.hypot(x + p.mu - 1.0, y)
    return r1, r2


def _check_guard(p, x, y):
    r1, r2 = distances(p, x, y)
    if np.any(r1 <= GUARD_RADIUS) or np.any(r2 <= GUARD_RADIUS):
        raise SingularityError(f"field evaluated within {GUARD_RADIUS} of a primary")
    # a belt with zero width is a point mass at the origin
    if p.Mb and p.T == 0.0 and np.any(np.hypot(x, y) <= GUARD_RADIUS):
        raise SingularityError("field evaluated at the centre of a zero-width belt")
    return r1, r2


def drag_angle(p, x, y):
    """Principal angle of ``(x + mu, y)`` in (-pi, pi]; the cut lies along y=0, x<-mu."""
    return np.arctan2(y, x + p.mu)


def conservative_potential(p, x, y):
    """Drag-free part of the effective potential (depends on position only)."""
    r1, r2 = _check_guard(p, x, y)
    r2sq = (x * x + y * y)
    return (
        0.5 * p.n2 * r2sq
        + (1.0 - p.mu) * p.q1 / r1
        + p.mu / r2
        + p.mu * p.A2 / (2.0 * r2**3)
        + p.Mb / np.sqrt(r2sq + p.T**2)
    )


def effective_potential(p, s):
    """
    Effective potential including the velocity-dependent and angular drag terms.

    Under drag the angular term makes the potential multivalued; the principal
    branch of :func:`drag_angle` is used, so values are only meaningful locally
    and across regions that do not cross the cut ``y = 0, x < -mu``.
    """
    x, y, vx, vy = s.x, s.y, s.vx, s.vy
    r1, _ = _check_guard(p, x, y)
    omega = conservative_potential(p, x, y)
    if p.W1 == 0.0:
        return omega
    rho_x = x + p.mu
    drag = (rho_x * vx + y * vy) / (2.0 * r1 * r1) - p.n * drag_angle(p, x, y)
    return omega + p.W1 * drag


def conservative_gradient(p, x, y):
    """Gradient of :func:`conservative_potential`."""
    r1, r2 = _check_guard(p, x, y)
    mu = p.mu
    k1 = (1.0 - mu) * p.q1 / r1**3
    k2 = mu / r2**3 + 1.5 * mu * p.A2 / r2**5
    kb = p.Mb / (x * x + y * y + p.T**2) ** 1.5
    gx = p.n2 * x - k1 * (x + mu) - k2 * (x + mu - 1.0) - kb * x
    gy = p.n2 * y - k1 * y - k2 * y - kb * y
    return gx, gy


def static_gradient(p, x, y):
    """
    Equilibrium conditions: the force at zero velocity.

    Equals the conservative gradient plus the static drag terms
    ``(+W1 n y / r1**2, -W1 n (x + mu) / r1**2)``.
    """
    gx, gy = conservative_gradient(p, x, y)
    if p.W1 == 0.0:
        return gx, gy
    r1sq = (x + p.mu) ** 2 + y * y
    c = p.W1 * p.n / r1sq
    return gx + c * y, gy - c * (x + p.mu)


def drag_force(p, x, y, vx, vy):
    """Velocity-dependent drag bracket of the equations of motion (full, incl. static part)."""
    rho_x = x + p.mu
    r1sq = rho_x * rho_x + y * y
    radial = (rho_x * vx + y * vy) / r1sq
    c = -p.W1 / r1sq
    return c * (rho_x * radial + vx - p.n * y), c * (y * radial + vy + p.n * rho_x)


def force(p, x, y, vx, vy):
    """Right-hand sides of the acceleration equations without Coriolis terms."""
    gx, gy = conservative_gradient(p, x, y)
    if p.W1 == 0.0:
        return gx, gy
    dx, dy = drag_force(p, x, y, vx, vy)
    return gx + dx, gy + dy


def rhs(p, s):
    """
    State derivative ``(vx, vy, ax, ay)`` of the full equations of motion.

    ``s`` is a :class:`PhaseState` or an array-like ``(x, y, vx, vy)``; the
    return type is a float ndarray of shape (4,) (or (4, ...) for array input).
    """
    if isinstance(s, PhaseState):
        x, y, vx, vy = s.x, s.y, s.vx, s.vy
    else:
        x, y, vx, vy = s
    fx, fy = force(p, x, y, vx, vy)
    ax = 2.0 * p.n * vy + fx
    ay = -2.0 * p.n * vx + fy
    # keep extended precision when the caller passes np.longdouble states
    return np.array([vx, vy, ax, ay], dtype=np.result_type(ax, ay, float))


def jacobi_constant(p, s):
    """Jacobi function ``C = 2 Omega - vx**2 - vy**2``."""
    return 2.0 * effective_potential(p, s) - s.vx**2 - s.vy**2


def jacobi_rate(p, s):
    """
    Analytic time derivative of the Jacobi function along the flow.

    Differentiating ``C`` along the equations of motion leaves only the drag
    contribution ``W1 (3 |v|**2 + rho . a) / r1**2`` where ``rho`` is the offset
    from the first primary and ``a`` the full acceleration.  Zero when W1 = 0.
    """
    if p.W1 == 0.0:
        return 0.0
    _, _, ax, ay = rhs(p, s)
    rho_x = s.x + p.mu
    r1sq = rho_x * rho_x + s.y * s.y
    v2 = s.vx * s.vx + s.vy * s.vy
    return p.W1 * (3.0 * v2 + rho_x * ax + s.y * ay) / r1sq


def make_scalar_rhs(p):
    """
    Fast scalar right-hand side ``f(t, y) -> ndarray`` for the integrator.

    Same field as :func:`rhs`, written with :mod:`math` for per-call speed.
    """
    mu, q1, A2, Mb, T2 = p.mu, p.q1, p.A2, p.Mb, p.T**2
    n, n2, W1 = p.n, p.n2, p.W1
    m1 = (1.0 - mu) * q1
    sqrt = math.sqrt

    def f(t, state):
        x, y, vx, vy = state
        rx = x + mu
        r1sq = rx * rx + y * y
        r2sq = (rx - 1.0) ** 2 + y * y
        r1 = sqrt(r1sq)
        r2 = sqrt(r2sq)
        if r1 <= GUARD_RADIUS or r2 <= GUARD_RADIUS:
            raise SingularityError("trajectory entered a primary guard radius")
        k1 = m1 / (r1 * r1sq)
        k2 = mu / (r2 * r2sq) + 1.5 * mu * A2 / (r2 * r2sq * r2sq)
        rsq = x * x + y * y + T2
        if Mb and rsq <= GUARD_RADIUS**2:
            raise SingularityError("trajectory entered the centre of a zero-width belt")
        kb = Mb / (rsq * sqrt(rsq))
        ax = 2.0 * n * vy + n2 * x - k1 * rx - k2 * (rx - 1.0) - kb * x
        ay = -2.0 * n * vx + n2 * y - k1 * y - k2 * y - kb * y
        if W1:
            radial = (rx * vx + y * vy) / r1sq
            c = W1 / r1sq
            ax -= c * (rx * radial + vx - n * y)
            ay -= c * (y * radial + vy + n * rx)
        return np.array((vx, vy, ax, ay))

    return f

