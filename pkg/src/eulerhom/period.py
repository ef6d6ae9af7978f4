"""Turning points and the period function of the closed-orbit region.

Closed orbits of the phase system surround the center and are level sets of
the Hamiltonian.  On the section y = 0 the level P meets the radicand

    R(x) = B x^((2 lam - 2)/lam) - lam^2 x^2 - 2 P,

whose two positive roots x_minus < x_plus bracket the center; the full
angular period of the orbit is

    T(P) = 2 * integral from x_minus to x_plus of dx / sqrt(R(x)).

Two independent routes compute T: a singular quadrature of that integral
after a trigonometric substitution absorbs the inverse-square-root endpoint
singularities, and a timed flight of the integrated orbit back to its
starting section.  Their agreement is the main internal cross-check.

Closed orbits occupy P in (0, P_c) when B > 0 (lam > 1) and P in
(-inf, P_c) when B < 0 (0 < lam < 1), where P_c is the center pressure from
:func:`eulerhom.dynamics.elliptic_center`.  The normalized coordinate

    s = P / P_c      (B > 0)        s = P_c / P      (B < 0)

maps either range onto (0, 1), with s -> 1 at the center and s -> 0 at the
boundary where the profile starts to touch zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .dynamics import Params, PhaseState, _rhs, _solver_tolerances, elliptic_center
from .errors import DegenerateOrbit, DomainError, NoEllipticOrbit, ToleranceNotMet

__all__ = [
    "EllipticOrbit",
    "PeriodTable",
    "extremal_pressure",
    "pressure_fraction",
    "pressure_at_fraction",
    "radicand",
    "turning_points",
    "period",
    "period_limits",
    "period_table",
]

TWO_PI = 2.0 * math.pi

#: tolerances accepted by the period routines
TOL_RANGE = (1e-13, 1e-3)

#: levels with s outside this closed interval are rejected as degenerate
S_WINDOW = (1e-6, 1.0 - 1e-6)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class EllipticOrbit:
    """A closed orbit: its level, turning points, and full angular period."""

    params: Params
    pressure: float
    x_minus: float
    x_plus: float
    period: float


@dataclass(frozen=True)
class PeriodTable:
    """Period function sampled over normalized pressure levels.

    Arrays are index-aligned and sorted by strictly increasing ``s``.
    """

    params: Params
    s: np.ndarray
    pressure: np.ndarray
    period: np.ndarray

    def rows(self):
        for i in range(self.s.size):
            yield float(self.s[i]), float(self.pressure[i]), float(self.period[i])


def extremal_pressure(params: Params) -> float:
    """Center pressure P_c, the extremum of P over the closed-orbit region."""
    return elliptic_center(params)[1]


def pressure_fraction(params: Params, pressure: float) -> float:
    """Normalized level s in (0, 1); raises NoEllipticOrbit outside the range."""
    p_c = extremal_pressure(params)
    if params.bernoulli > 0.0:
        s = pressure / p_c
    else:
        if pressure >= 0.0:
            raise NoEllipticOrbit(
                f"P = {pressure} outside the closed-orbit range (-inf, {p_c}) "
                f"for B = {params.bernoulli}"
            )
        s = p_c / pressure
    if not 0.0 < s < 1.0:
        raise NoEllipticOrbit(
            f"P = {pressure} outside the open closed-orbit pressure range "
            f"(P_c = {p_c}, B = {params.bernoulli})"
        )
    return float(s)


def pressure_at_fraction(params: Params, s: float) -> float:
    """Raw pressure at normalized level s in (0, 1)."""
    if not 0.0 < s < 1.0:
        raise NoEllipticOrbit(f"normalized level s = {s} outside (0, 1)")
    p_c = extremal_pressure(params)
    return s * p_c if params.bernoulli > 0.0 else p_c / s


def radicand(params: Params, pressure: float, x) -> np.ndarray | float:
    """R(x) = B x^((2 lam - 2)/lam) - lam^2 x^2 - 2 P, vectorized over x >= 0."""
    lam, b = params.lam, params.bernoulli
    e2 = params.hamiltonian_exponent
    x = np.asarray(x, dtype=float)
    pw = x if lam == 2.0 else np.power(x, e2)
    out = b * pw - lam * lam * x * x - 2.0 * pressure
    return float(out) if out.ndim == 0 else out


def _check_orbit_level(params: Params, pressure: float) -> tuple[float, float, float]:
    """Return (s, x_c, P_c) after validating the level carries an orbit."""
    center, p_c = elliptic_center(params)
    s = pressure_fraction(params, pressure)
    return s, center.x, p_c


def turning_points(params: Params, pressure: float) -> tuple[float, float]:
    """The two positive roots of R(x) = 0 bracketing the center abscissa.

    Each root is refined to ~1e-12 relative accuracy.  At the extremal level
    both roots coincide with the center and (x_c, x_c) is returned; levels
    indistinguishable from it (but not equal) raise DegenerateOrbit.
    """
    center, p_c = elliptic_center(params)
    x_c = center.x
    if abs(pressure - p_c) <= 8.0 * _EPS * abs(p_c):
        return x_c, x_c
    s = pressure_fraction(params, pressure)
    if 1.0 - s < 1e-11:
        raise DegenerateOrbit(
            f"level s = {s} too close to the center to resolve turning points"
        )

    def f(x):
        return radicand(params, pressure, x)

    if f(x_c) <= 0.0:
        raise DegenerateOrbit("radicand not positive at the center abscissa")

    if params.bernoulli > 0.0:
        a = 0.0  # R(0) = -2P < 0 on this branch
    else:
        a = x_c
        for _ in range(600):
            a *= 0.5
            if f(a) <= 0.0:
                break
        else:
            raise ToleranceNotMet("failed to bracket the lower turning point")
    b = x_c
    for _ in range(600):
        b *= 2.0
        if f(b) <= 0.0:
            break
    else:
        raise ToleranceNotMet("failed to bracket the upper turning point")

    kwargs = {"rtol": 4.0 * _EPS, "maxiter": 200}
    x_minus = brentq(f, a, x_c, xtol=max(x_c * 1e-20, 5e-324), **kwargs)
    x_plus = brentq(f, x_c, b, xtol=max(x_c * 1e-20, 5e-324), **kwargs)
    return float(x_minus), float(x_plus)


def period_limits(params: Params) -> tuple[float, float]:
    """Limits of the period at the center and at the boundary of the region.

    The center limit 2*pi/sqrt(2*lam) is the small-oscillation period of the
    linearization (the frequency satisfies omega^2 = 2*lam).  The boundary
    limit as the orbits grow is pi on the B > 0 branch; on the B < 0 branch
    it is pi/lam, the image of pi under the exponent-inverting conjugacy
    x -> x^(1/lam)(theta/lam), which stretches periods by lam.  Both boundary
    values are cross-checked numerically in the test suite.
    """
    lam = params.lam
    if params.bernoulli * (lam - 1.0) <= 0.0:
        raise DomainError(
            f"no closed-orbit region for lambda = {lam}, B = {params.bernoulli}"
        )
    center_limit = TWO_PI / math.sqrt(2.0 * lam)
    boundary_limit = math.pi if lam > 1.0 else math.pi / lam
    return center_limit, boundary_limit


def _validate_tol(tol: float) -> None:
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise DomainError(f"tol must lie in [{TOL_RANGE[0]}, {TOL_RANGE[1]}]")


def _resolve_level(params: Params, pressure, s) -> float:
    if (pressure is None) == (s is None):
        raise DomainError("specify exactly one of pressure and s")
    if pressure is None:
        pressure = pressure_at_fraction(params, s)
    return float(pressure)


def _make_integrand(params: Params, pressure: float):
    """Vectorized integrand of the substituted period integral.

    Under x = mid + half*sin(u) the inverse-square-root endpoint zeros cancel
    against cos(u), leaving a bounded integrand on (-pi/2, pi/2).  The
    radicand is evaluated through two algebraically equal forms with
    complementary conditioning: with t = (x - x_c)/x_c and w = lam^2 x_c^2,
    the center condition B x_c^e2 = lam^3 x_c^2/(lam - 1) gives

        R(x) = R(x_c) + w * [(lam/(lam-1)) * expm1(e2*log1p(t)) - 2t - t^2],

    which keeps full accuracy near the center where the raw formula cancels
    catastrophically; away from the center (|t| >= 0.1) the raw formula is
    the accurate one.
    """
    x_minus, x_plus = turning_points(params, pressure)
    center, p_c = elliptic_center(params)
    x_c = center.x
    mid = 0.5 * (x_plus + x_minus)
    half = 0.5 * (x_plus - x_minus)
    dm = mid - x_c
    lam, b = params.lam, params.bernoulli
    lam2 = lam * lam
    e2 = params.hamiltonian_exponent
    w = lam2 * x_c * x_c
    ratio = lam / (lam - 1.0)
    r_center = 2.0 * (p_c - pressure)
    two_p = 2.0 * pressure

    # Series coefficients of g(t) = ratio*((1+t)^e2 - 1) - 2t - t^2: the
    # linear terms cancel identically (ratio*e2 == 2), so the sum starts at
    # t^2 with coefficient e2 - 2 = -2/lam and carries no cancellation at all.
    coeffs = [-2.0 / lam]
    binom = 0.5 * e2 * (e2 - 1.0)
    for k in range(3, 22):
        binom *= (e2 - (k - 1)) / k
        coeffs.append(ratio * binom)

    def g_of_t(t):
        mid_band = np.abs(t) >= 0.01
        t_m = np.where(mid_band, t, 0.0)
        g_mid = ratio * np.expm1(e2 * np.log1p(t_m)) - t_m * (2.0 + t_m)
        acc = np.zeros_like(t)
        for c in reversed(coeffs):
            acc = acc * t + c
        return np.where(mid_band, g_mid, acc * t * t)

    def integrand(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        delta = dm + half * np.sin(u)
        t = delta / x_c
        near = np.abs(t) < 0.1
        t_safe = np.where(near, t, 0.0)
        r_near = r_center + w * g_of_t(t_safe)
        x = x_c + delta
        x_safe = np.where(x > 0.0, x, 1.0)
        pw = x_safe if lam == 2.0 else x_safe**e2
        r_far = np.where(x > 0.0, b * pw - lam2 * x_safe * x_safe - two_p, 0.0)
        r = np.where(near, r_near, r_far)
        out = np.zeros_like(r)
        good = r > 0.0
        out[good] = half * np.cos(u[good]) / np.sqrt(r[good])
        return out

    return integrand


#: Gauss-Legendre node counts tried in turn before the bisection fallback
_GL_ORDERS = (32, 64, 128, 256, 512, 1024, 2048)

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        nodes, weights = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * math.pi * nodes, 0.5 * math.pi * weights)
    return _GL_CACHE[n]


def _period_quadrature(params: Params, pressure: float, tol: float) -> float:
    integrand = _make_integrand(params, pressure)

    # Fixed high-order rule with node doubling; Gauss nodes stay clear of the
    # endpoint roundoff slivers.  Falls back to adaptive interval bisection
    # when the interior variation (boundary-hugging corner) stalls the rule.
    prev = None
    for order in _GL_ORDERS:
        nodes, weights = _gl_rule(order)
        value = 2.0 * float(weights @ integrand(nodes))
        if prev is not None and abs(value - prev) <= max(0.5 * tol, 4e-16 * abs(value)):
            return value
        prev = value

    out = quad(
        lambda u: float(integrand(u)[0]),
        -0.5 * math.pi,
        0.5 * math.pi,
        epsabs=0.25 * tol,
        epsrel=1e-12,
        limit=400,
        full_output=1,
    )
    value, abserr = out[0], out[1]
    if 2.0 * abserr > tol:  # a bare warning with a met estimate is acceptable
        raise ToleranceNotMet(
            f"quadrature error estimate {2.0 * abserr:.3e} exceeds tol {tol:.3e}"
        )
    return 2.0 * value


def _period_flight(params: Params, pressure: float, tol: float) -> float:
    _x_minus, x_plus = turning_points(params, pressure)
    lo = min(period_limits(params))
    hi = max(period_limits(params))
    guard = 0.4 * lo  # strictly below T/2 since T > lo on the open region
    t_max = 4.0 * hi

    start = PhaseState(x_plus, 0.0)
    rtol, atol = _solver_tolerances(params, start, max(tol * 0.1, 1e-13))
    fun = _rhs(params)

    head = solve_ivp(fun, (0.0, guard), [x_plus, 0.0], method="DOP853", rtol=rtol, atol=atol)
    if not head.success:
        raise ToleranceNotMet(f"flight integration failed: {head.message}")

    def section(_t, z):
        return z[1]

    section.terminal = True
    section.direction = -1.0  # downward crossing: the return to (x_plus, 0)

    tail = solve_ivp(
        fun,
        (guard, t_max),
        head.y[:, -1],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=section,
    )
    if not tail.success:
        raise ToleranceNotMet(f"flight integration failed: {tail.message}")
    if tail.t_events[0].size == 0:
        raise ToleranceNotMet("orbit did not return to the section within the span")
    return float(tail.t_events[0][0])


def period(
    params: Params,
    pressure: float | None = None,
    method: str = "quadrature",
    tol: float = 1e-9,
    *,
    s: float | None = None,
) -> float:
    """Full angular period of the closed orbit at a pressure level.

    The level may be given raw (``pressure``) or normalized (``s``).  Methods:

    - ``"quadrature"``: the turning-point integral under the substitution
      x = mid + half*sin(u), which removes both endpoint singularities, then
      adaptive Gauss-Kronrod quadrature to absolute accuracy <= tol.
    - ``"flight"``: integrate the orbit from (x_plus, 0) and time the first
      return to the section y = 0 crossed downward (one full loop), the event
      located by interpolation on the dense solver output.

    Levels with s outside [1e-6, 1 - 1e-6] raise DegenerateOrbit; the limits
    themselves are available from :func:`period_limits`.
    """
    _validate_tol(tol)
    pressure = _resolve_level(params, pressure, s)
    s_val = pressure_fraction(params, pressure)
    if not S_WINDOW[0] <= s_val <= S_WINDOW[1]:
        raise DegenerateOrbit(
            f"level s = {s_val:.3e} outside [{S_WINDOW[0]}, {1 - S_WINDOW[0]}]; "
            "use period_limits for the limiting values"
        )
    if method == "quadrature":
        return _period_quadrature(params, pressure, tol)
    if method == "flight":
        return _period_flight(params, pressure, tol)
    raise DomainError(f"unknown method {method!r}: expected 'quadrature' or 'flight'")


def _cluster_levels(s_min: float, s_max: float, n: int) -> np.ndarray:
    """Levels clustered geometrically toward both endpoints."""
    n_lo = (n + 1) // 2
    n_hi = n - n_lo
    lo = np.geomspace(s_min, 0.5, n_lo)
    hi = 1.0 - np.geomspace(1.0 - s_max, 0.5, n_hi + 1)[-2::-1]
    return np.concatenate([lo, hi])


def period_table(
    params: Params,
    n: int,
    s_min: float = 1e-3,
    s_max: float = 1.0 - 1e-3,
    spacing: str = "cluster",
    tol: float = 1e-9,
    jobs: int | None = None,
) -> PeriodTable:
    """Tabulate the period over n normalized levels in [s_min, s_max].

    Every row is computed by quadrature; at least three interior rows are
    re-computed by the flight method and must agree within 5 * tol, otherwise
    ToleranceNotMet is raised.  ``spacing`` is ``"uniform"`` or ``"cluster"``
    (geometric refinement toward both endpoints).  ``jobs`` enables bounded
    thread parallelism over rows; ordering of the output is by s regardless.
    """
    if n < 2:
        raise DomainError("need at least 2 rows")
    if not 0.0 < s_min < s_max < 1.0:
        raise DomainError("require 0 < s_min < s_max < 1")
    if spacing == "uniform":
        levels = np.linspace(s_min, s_max, n)
    elif spacing == "cluster":
        levels = _cluster_levels(s_min, s_max, n)
    else:
        raise DomainError(f"unknown spacing {spacing!r}")
    _validate_tol(tol)

    pressures = np.array([pressure_at_fraction(params, s) for s in levels])

    def row(p: float) -> float:
        return _period_quadrature(params, p, tol)

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            periods = np.array(list(pool.map(row, pressures)))
    else:
        periods = np.array([row(p) for p in pressures])

    # Spot-check against the independent flight oracle at interior levels;
    # the orbit corners at extreme s are quadrature-only territory.
    check_at = sorted({int(np.argmin(np.abs(levels - q))) for q in (0.25, 0.5, 0.75)})
    for i in check_at:
        t_flight = _period_flight(params, float(pressures[i]), tol)
        if abs(t_flight - periods[i]) > 5.0 * tol:
            raise ToleranceNotMet(
                f"flight cross-check failed at s = {levels[i]:.6g}: "
                f"|{t_flight} - {periods[i]}| > {5.0 * tol:.3e}"
            )
    return PeriodTable(params, levels, pressures, periods)
