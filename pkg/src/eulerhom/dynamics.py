"""Phase-plane dynamics of the angular profile of self-similar planar flows.

A stream function of the form r^lam * psi(theta) generates a steady,
incompressible planar flow exactly when the profile psi solves a second-order
ODE in the angle.  With phase coordinates (x, y) = (psi, psi') that ODE is the
first-order system

    x' = y
    y' = -lam^2 * x + ((lam - 1)/lam) * B * x^((lam - 2)/lam)

where B is the Bernoulli constant.  The pressure coefficient

    P = -y^2/2 - lam^2 * x^2 / 2 + (B/2) * x^((2*lam - 2)/lam)

is conserved along orbits and plays the role of the Hamiltonian; B itself can
be recovered from any state on a level set via

    B = (2*P + lam^2 * x^2 + y^2) * x^(2/lam - 2).

Fractional powers use the principal real branch and require x > 0; the only
exception is lam = 2, where the power term is constant and the system is
linear on the whole plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, ToleranceNotMet
from .sampling import derivative_periodic, derivative_uniform, uniform_spacing

__all__ = [
    "Params",
    "PhaseState",
    "Trajectory",
    "vector_field",
    "pressure_hamiltonian",
    "bernoulli",
    "elliptic_center",
    "integrate_orbit",
    "scale_solution",
    "pressure_residual_profile",
]

#: integration tolerances accepted by integrate_orbit
TOL_RANGE = (1e-13, 1e-6)


@dataclass(frozen=True)
class Params:
    """Homogeneity exponent and Bernoulli constant defining the phase system.

    ``lam`` must be positive and different from 1 (the profile equation
    degenerates there); ``bernoulli`` is any finite real, conventionally
    normalized to +-1 by the scaling symmetry.
    """

    lam: float
    bernoulli: float

    def __post_init__(self):
        lam = float(self.lam)
        b = float(self.bernoulli)
        if not math.isfinite(lam) or lam <= 0.0:
            raise DomainError(f"lambda must be positive and finite, got {lam}")
        if abs(lam - 1.0) < 1e-12:
            raise DomainError("lambda = 1 is degenerate and not supported")
        if not math.isfinite(b):
            raise DomainError("bernoulli constant must be finite")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "bernoulli", b)

    @property
    def field_exponent(self) -> float:
        """Exponent (lam - 2)/lam of the power term in the vector field."""
        return (self.lam - 2.0) / self.lam

    @property
    def hamiltonian_exponent(self) -> float:
        """Exponent (2*lam - 2)/lam of the power term in the Hamiltonian."""
        return 2.0 - 2.0 / self.lam


@dataclass(frozen=True)
class PhaseState:
    """A point (x, y) = (psi, psi') in the phase plane, with optional angle tag."""

    x: float
    y: float
    theta: float | None = None


@dataclass
class Trajectory:
    """Sampled flow of the phase system at strictly increasing angles."""

    params: Params
    theta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    pressure: float  # Hamiltonian recorded at the initial state

    def state_at(self, i: int) -> PhaseState:
        return PhaseState(float(self.x[i]), float(self.y[i]), float(self.theta[i]))

    def hamiltonian_values(self) -> np.ndarray:
        """Pointwise Hamiltonian along the samples (vectorized)."""
        p = self.params
        xs = np.asarray(self.x, dtype=float)
        if p.lam != 2.0 and np.any(xs <= 0.0):
            raise DomainError("trajectory leaves the x > 0 half-plane")
        pw = xs if p.lam == 2.0 else np.power(xs, p.hamiltonian_exponent)
        return -0.5 * self.y**2 - 0.5 * p.lam**2 * xs**2 + 0.5 * p.bernoulli * pw

    def hamiltonian_drift(self) -> float:
        return float(np.max(np.abs(self.hamiltonian_values() - self.pressure)))


def _require_positive_x(params: Params, x: float) -> None:
    if params.lam != 2.0 and x <= 0.0:
        raise DomainError(
            f"x = {x} outside the principal branch x > 0 (lambda = {params.lam})"
        )


def vector_field(params: Params, s: PhaseState) -> tuple[float, float]:
    """Right-hand side (x', y') of the phase system at a state.

    Returns ``(y, -lam^2 x + ((lam-1)/lam) B x^((lam-2)/lam))``.  Raises
    DomainError for x <= 0 unless lam = 2, where the power term is the
    constant 1 and the system is globally linear.
    """
    x = float(s.x)
    _require_positive_x(params, x)
    lam, b = params.lam, params.bernoulli
    pw = 1.0 if lam == 2.0 else x**params.field_exponent
    return float(s.y), -lam * lam * x + (lam - 1.0) / lam * b * pw


def pressure_hamiltonian(params: Params, s: PhaseState) -> float:
    """Conserved pressure coefficient P at a state (the Hamiltonian)."""
    x = float(s.x)
    _require_positive_x(params, x)
    lam, b = params.lam, params.bernoulli
    pw = x if lam == 2.0 else x**params.hamiltonian_exponent
    return -0.5 * s.y**2 - 0.5 * lam * lam * x * x + 0.5 * b * pw


def bernoulli(lam: float, pressure: float, s: PhaseState) -> float:
    """Bernoulli constant recovered from a pressure level and a state on it.

    Inverse of :func:`pressure_hamiltonian` in the sense that feeding P back
    through this formula reproduces the Bernoulli constant of the system.
    """
    x = float(s.x)
    if x <= 0.0:
        raise DomainError("Bernoulli recovery requires x > 0")
    if abs(lam - 1.0) < 1e-12 or lam <= 0.0:
        raise DomainError("lambda must be positive and different from 1")
    return (2.0 * pressure + lam * lam * x * x + s.y**2) * x ** (2.0 / lam - 2.0)


def elliptic_center(params: Params) -> tuple[PhaseState, float]:
    """Unique equilibrium on x > 0 and its pressure (the extremal level).

    The fixed point solves lam^2 x = ((lam-1)/lam) B x^((lam-2)/lam), giving
    x_c = (B (lam-1) / lam^3)^(lam/2); it exists iff B (lam-1) > 0, i.e.
    B > 0 with lam > 1 or B < 0 with 0 < lam < 1.  The returned pressure is
    the Hamiltonian evaluated at the center and is the extremum of P over the
    region of closed orbits (a maximum on either branch).
    """
    lam, b = params.lam, params.bernoulli
    q = b * (lam - 1.0) / lam**3
    if q <= 0.0:
        raise DomainError(
            f"no elliptic region for lambda = {lam}, B = {b}: need B*(lambda-1) > 0"
        )
    x_c = q ** (lam / 2.0)
    state = PhaseState(x_c, 0.0)
    return state, pressure_hamiltonian(params, state)


def _rhs(params: Params):
    lam, b = params.lam, params.bernoulli
    coeff = (lam - 1.0) / lam * b
    lam2 = lam * lam
    exponent = params.field_exponent

    if lam == 2.0:

        def fun(_t, z):
            return (z[1], -lam2 * z[0] + coeff)

    else:

        def fun(_t, z):
            x = z[0]
            if x <= 0.0:
                raise DomainError(
                    "trajectory reached x <= 0 where the power law is undefined"
                )
            return (z[1], -lam2 * x + coeff * x**exponent)

    return fun


def _solver_tolerances(params: Params, start: PhaseState, tol: float):
    """Relative/absolute tolerances scaled to the orbit's magnitude."""
    omega = math.sqrt(2.0 * params.lam)
    x_scale = max(abs(start.x), 1e-290)
    y_scale = max(abs(start.y), omega * x_scale)
    rtol = max(tol, 2.5e-14)
    atol = np.array([rtol * x_scale * 1e-2, rtol * y_scale * 1e-2])
    return rtol, atol


def integrate_orbit(
    params: Params,
    start: PhaseState,
    span: float,
    tol: float = 1e-10,
    n_samples: int | None = None,
) -> Trajectory:
    """Integrate the phase system over an angle span with adaptive high order.

    Uses an 8th-order adaptive Runge-Kutta scheme with dense output; the
    Hamiltonian drift along the returned samples stays below 10 * tol * span.
    DomainError propagates if the trajectory reaches x <= 0 where the power
    law is singular or undefined.
    """
    if not span > 0.0:
        raise DomainError("span must be positive")
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise DomainError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")
    _require_positive_x(params, start.x)

    if n_samples is None:
        omega = math.sqrt(2.0 * params.lam)
        n_samples = int(min(max(200, math.ceil(span * max(omega, 1.0) * 24)), 200_000))
    rtol, atol = _solver_tolerances(params, start, tol)
    p0 = pressure_hamiltonian(params, start)
    sol = solve_ivp(
        _rhs(params),
        (0.0, span),
        [start.x, start.y],
        method="DOP853",
        t_eval=np.linspace(0.0, span, n_samples),
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise ToleranceNotMet(f"integration failed: {sol.message}")
    theta0 = start.theta or 0.0
    return Trajectory(params, sol.t + theta0, sol.y[0], sol.y[1], p0)


def scale_solution(
    c: float, params: Params, s: PhaseState, pressure: float
) -> tuple[Params, PhaseState, float]:
    """Rescale a solution by x -> c x, which renormalizes the Bernoulli constant.

    The image ((lam, c^(2/lam) B), (c x, c y), c^2 P) satisfies the Hamiltonian
    relation exactly, and the angular period of the orbit through the scaled
    point is unchanged (the scaled field equals c times the original field).
    """
    if not c > 0.0:
        raise DomainError("scale factor must be positive")
    lam = params.lam
    scaled = Params(lam, c ** (2.0 / lam) * params.bernoulli)
    return scaled, PhaseState(c * s.x, c * s.y, s.theta), c * c * pressure


def pressure_residual_profile(lam: float, profile) -> np.ndarray:
    """Pointwise pressure recovered from a sampled profile via the profile ODE.

    Evaluates [-(lam-1) psi'^2 + lam^2 psi^2 + lam psi'' psi] / (2 (lam-1)) on
    the profile's grid, estimating psi'' from the sampled psi'.  For a genuine
    solution the result is constant to discretization accuracy, so its spread
    is a residual test and its mean recovers the pressure coefficient.

    Spectral differentiation is used when the samples close up periodically;
    otherwise a sixth-order finite-difference stencil.
    """
    if abs(lam - 1.0) < 1e-12:
        raise DomainError("lambda = 1 is degenerate for the pressure relation")
    theta = np.asarray(profile.theta, dtype=float)
    psi = np.asarray(profile.psi, dtype=float)
    dpsi = np.asarray(profile.psi_prime, dtype=float)
    h = uniform_spacing(theta)

    scale = max(np.max(np.abs(psi)), np.max(np.abs(dpsi)), 1e-300)
    spans_period = abs((theta[-1] - theta[0]) - 2.0 * np.pi) <= 1e-9
    closed = (
        spans_period
        and abs(psi[-1] - psi[0]) <= 1e-8 * scale
        and abs(dpsi[-1] - dpsi[0]) <= 1e-8 * scale
    )
    if closed:
        d2 = np.empty_like(psi)
        d2[:-1] = derivative_periodic(dpsi[:-1], h)
        d2[-1] = d2[0]
    else:
        d2 = derivative_uniform(dpsi, h)
    return (-(lam - 1.0) * dpsi**2 + lam * lam * psi**2 + lam * d2 * psi) / (
        2.0 * (lam - 1.0)
    )
