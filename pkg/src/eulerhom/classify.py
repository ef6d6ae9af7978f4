"""Counting, locating, and reconstructing 2*pi-periodic profiles.

A profile closes over one revolution exactly when the full period T of its
phase orbit satisfies T = 2*pi/n for a positive integer n (the winding).
Since T is pinned strictly between its center and boundary limits, counting
solutions reduces to counting integers n with 2*pi/n strictly inside the open
interval spanned by those limits:

- B = +1: limits (2*pi/sqrt(2*lam), pi), so the count is the number of
  integers strictly inside (2, sqrt(2*lam)); empty for lam <= 9/2 and at
  lam = 2 every orbit has T = pi (isochronous center: a continuum).
- B = -1: the interval never contains 2*pi/n for integer n except at
  lam = 1/2, the dual isochronous case with T = 2*pi everywhere.

``count_elliptic`` evaluates this either directly from the limits ("table")
or by sweeping the computed period function and counting the actual crossings
of each 2*pi/n level ("scan"); the two must agree, which is the central
cross-validation of the package.  The exponent-inverting conjugacy
x -> x^(1/lam)(theta/lam) maps solutions between lam and 1/lam, and the
obstruction problem det D^2 u = |x|^alpha reduces to the same count at
lam = 2 + alpha/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    Params,
    PhaseState,
    elliptic_center,
    integrate_orbit,
    pressure_residual_profile,
)
from .errors import (
    ClosureFailure,
    ContinuumCase,
    DomainError,
    NoSolution,
)
from .period import (
    EllipticOrbit,
    _period_quadrature,
    period_limits,
    period_table,
    pressure_at_fraction,
    turning_points,
)
from .sampling import periodic_interpolator

__all__ = [
    "SolutionProfile",
    "ClassificationResult",
    "count_elliptic",
    "find_periodic",
    "reconstruct_profile",
    "classify_profile",
    "conjugate_dual",
    "monge_ampere_count",
]

TWO_PI = 2.0 * math.pi

#: targets closer than this to a period limit are rejected as boundary-grazing
GRAZING_MARGIN = 1e-6

#: crossings closer than this in s are merged (near-tangential double counts)
MERGE_WIDTH = 1e-4

#: relative threshold below which a profile value counts as zero
ZERO_THRESHOLD = 1e-9

#: deepest normalized level the scanning sweep will chase crossings to
SCAN_FLOOR = 1e-11


@dataclass
class SolutionProfile:
    """A sampled angular profile theta -> (psi, psi') over [0, 2*pi].

    Arrays are index-aligned on a uniform grid including both endpoints, so
    ``theta[0] = 0`` and ``theta[-1] = 2*pi``.  ``winding`` is the number of
    phase-orbit loops completed over one revolution (0 for a pure rotation).
    """

    lam: float
    bernoulli: float
    pressure: float
    winding: int
    theta: np.ndarray
    psi: np.ndarray
    psi_prime: np.ndarray
    type_tag: str = "elliptic"

    def scale(self) -> float:
        return float(max(np.max(np.abs(self.psi)), np.max(np.abs(self.psi_prime)), 1e-300))

    def closure_error(self) -> float:
        """Worst endpoint mismatch of (psi, psi'), absolute."""
        return float(
            max(
                abs(self.psi[-1] - self.psi[0]),
                abs(self.psi_prime[-1] - self.psi_prime[0]),
            )
        )

    def is_closed(self, tol: float = 1e-6) -> bool:
        return self.closure_error() <= tol * self.scale()

    def n_maxima(self) -> int:
        return _count_maxima(self.psi[:-1])


@dataclass(frozen=True)
class ClassificationResult:
    """Answer of the periodic-solution count for one (lam, B).

    ``kind`` is ``"none"``, ``"finite"`` or ``"continuum"``; ``count`` and
    ``windings`` are populated for the finite case only.  The pure rotation at
    the extremal pressure always exists and is flagged separately.
    """

    kind: str
    count: int | None = None
    windings: tuple[int, ...] | None = None
    extremal_rotation: bool = True

    def __post_init__(self):
        if self.kind not in ("none", "finite", "continuum"):
            raise DomainError(f"unknown classification kind {self.kind!r}")
        if self.kind == "finite":
            if not self.windings or self.count != len(self.windings):
                raise DomainError("finite result requires count == len(windings)")


def _count_maxima(values: np.ndarray) -> int:
    """Strict local maxima of a cyclically sampled function, plateau-safe."""
    diffs = np.diff(np.concatenate([values, values[:1]]))
    signs = np.sign(diffs)
    signs = signs[signs != 0.0]
    if signs.size == 0:
        return 0
    changes = 0
    for a, b in zip(signs, np.roll(signs, -1)):
        if a > 0 > b:
            changes += 1
    return changes


def _params_for(lam: float, bernoulli_sign: int) -> Params:
    if bernoulli_sign not in (1, -1):
        raise DomainError("bernoulli_sign must be +1 or -1")
    params = Params(float(lam), float(bernoulli_sign))
    if params.bernoulli * (params.lam - 1.0) <= 0.0:
        raise DomainError(
            f"no closed-orbit region for lambda = {lam}, B = {bernoulli_sign}: "
            "need B = +1 with lambda > 1 or B = -1 with lambda < 1"
        )
    return params


def _isochrony_probe(params: Params, tol: float = 1e-9) -> bool:
    """True when T is constant over s in {0.25, 0.5, 0.75} and 2*pi/T is integral."""
    ts = [
        _period_quadrature(params, pressure_at_fraction(params, s), min(tol, 1e-10))
        for s in (0.25, 0.5, 0.75)
    ]
    if max(ts) - min(ts) > tol:
        return False
    n = TWO_PI / ts[1]
    return abs(n - round(n)) < 1e-6


def _is_continuum(params: Params) -> bool:
    exact = (params.bernoulli > 0.0 and params.lam == 2.0) or (
        params.bernoulli < 0.0 and params.lam == 0.5
    )
    return exact and _isochrony_probe(params)


def _admissible_windings(params: Params, margin: float = 0.0) -> list[int]:
    """Integers n with 2*pi/n strictly inside the open interval of period limits."""
    lo, hi = sorted(period_limits(params))
    if hi - lo <= 2.0 * margin:
        return []
    n_max = int(math.floor(TWO_PI / (lo + margin))) + 1
    return [n for n in range(1, n_max + 1) if lo + margin < TWO_PI / n < hi - margin]


def count_elliptic(
    lam: float,
    bernoulli_sign: int,
    mode: str = "table",
    *,
    tol: float = 1e-9,
    scan_samples: int = 400,
) -> ClassificationResult:
    """Number of distinct closed-orbit profiles that are 2*pi-periodic.

    ``mode="table"`` evaluates the limit-interval count directly;
    ``mode="scan"`` sweeps the computed period function over normalized levels
    and counts confirmed crossings of every candidate 2*pi/n value inside the
    observed range, deepening the sweep toward the boundary when an admissible
    target has not yet been bracketed.  Isochronous parameters (lam = 2 with
    B = +1, lam = 1/2 with B = -1) report a continuum: every orbit is
    2*pi-periodic there.
    """
    params = _params_for(lam, bernoulli_sign)
    if mode == "table":
        if _is_continuum(params):
            return ClassificationResult("continuum")
        windings = _admissible_windings(params)
        if not windings:
            return ClassificationResult("none")
        return ClassificationResult("finite", len(windings), tuple(windings))
    if mode == "scan":
        return _count_by_scan(params, tol, scan_samples)
    raise DomainError(f"unknown mode {mode!r}: expected 'table' or 'scan'")


def _scan_quad(params: Params, s: float, tol: float) -> float:
    """Quadrature period at level s; deepened rows accept a relaxed tolerance."""
    tol_eff = tol if s >= 1e-6 else max(tol, 1e-8)
    return _period_quadrature(params, pressure_at_fraction(params, s), tol_eff)


def _scan_rows(params: Params, tol: float, n_samples: int):
    """Sweep rows (s, T), deepening toward s -> 0 to cover admissible targets."""
    table = period_table(params, n_samples, 1e-6, 1.0 - 1e-6, "cluster", tol)
    s_vals = list(table.s)
    t_vals = list(table.period)

    chase = [TWO_PI / n for n in _admissible_windings(params, GRAZING_MARGIN)]
    s_min = 1e-6
    while chase and s_min > SCAN_FLOOR:
        lo_obs, hi_obs = min(t_vals), max(t_vals)
        if all(lo_obs <= t <= hi_obs for t in chase):
            break
        deeper = max(s_min * 1e-2, SCAN_FLOOR)
        extra = np.geomspace(deeper, s_min, 25)[:-1]
        rows = [(float(s), _scan_quad(params, float(s), tol)) for s in extra]
        s_vals = [r[0] for r in rows] + s_vals
        t_vals = [r[1] for r in rows] + t_vals
        s_min = deeper
    return np.array(s_vals), np.array(t_vals)


def _count_by_scan(params: Params, tol: float, n_samples: int) -> ClassificationResult:
    if _is_continuum(params):
        return ClassificationResult("continuum")
    s_vals, t_vals = _scan_rows(params, tol, n_samples)
    lo_obs, hi_obs = float(t_vals.min()), float(t_vals.max())
    n_max = int(math.floor(TWO_PI / lo_obs)) + 1
    candidates = [n for n in range(1, n_max + 1) if lo_obs <= TWO_PI / n <= hi_obs]

    windings: list[int] = []
    for n in candidates:
        target = TWO_PI / n
        crossings: list[float] = []
        diffs = t_vals - target
        for i in range(diffs.size - 1):
            a, b = diffs[i], diffs[i + 1]
            if a == 0.0:
                crossings.append(float(s_vals[i]))
            elif a * b < 0.0:
                root = brentq(
                    lambda s: _scan_quad(params, float(s), tol) - target,
                    float(s_vals[i]),
                    float(s_vals[i + 1]),
                    xtol=1e-14,
                    rtol=4.0 * np.finfo(float).eps,
                )
                crossings.append(float(root))
        if diffs[-1] == 0.0:
            crossings.append(float(s_vals[-1]))
        crossings.sort()
        merged: list[float] = []
        for c in crossings:
            if not merged or c - merged[-1] > MERGE_WIDTH:
                merged.append(c)
        windings.extend([n] * len(merged))

    if not windings:
        return ClassificationResult("none")
    windings.sort()
    return ClassificationResult("finite", len(windings), tuple(windings))


def find_periodic(
    lam: float, bernoulli_sign: int, n: int, tol: float = 1e-9
) -> EllipticOrbit:
    """Locate the closed orbit whose full period is exactly 2*pi/n.

    Root-finds on s -> T(s) - 2*pi/n with a bracketing sweep followed by
    refinement until |T - 2*pi/n| <= tol.  Raises NoSolution when 2*pi/n lies
    outside the open period range (or grazes an endpoint within 1e-6), and
    ContinuumCase for the isochronous parameters, where every level qualifies
    and the caller must pick a pressure explicitly.
    """
    params = _params_for(lam, bernoulli_sign)
    if n < 1:
        raise DomainError("winding n must be a positive integer")
    if _is_continuum(params):
        raise ContinuumCase(
            f"every orbit at lambda = {lam} is 2*pi-periodic; pick a pressure level"
        )
    lo, hi = sorted(period_limits(params))
    target = TWO_PI / n
    if not lo < target < hi:
        raise NoSolution(f"2*pi/{n} = {target:.6g} outside the open period range "
                         f"({lo:.6g}, {hi:.6g})")
    if min(target - lo, hi - target) <= GRAZING_MARGIN:
        raise NoSolution(
            f"boundary-grazing: 2*pi/{n} within {GRAZING_MARGIN} of a period limit"
        )

    quad_tol = min(tol / 8.0, 1e-10)

    def gap(s: float) -> float:
        return _period_quadrature(params, pressure_at_fraction(params, s), quad_tol) - target

    s_vals, t_vals = _scan_rows(params, quad_tol, 100)
    diffs = t_vals - target
    bracket = None
    for i in range(diffs.size - 1):
        if diffs[i] == 0.0:
            bracket = (float(s_vals[i]), float(s_vals[i]))
            break
        if diffs[i] * diffs[i + 1] < 0.0:
            bracket = (float(s_vals[i]), float(s_vals[i + 1]))
            break
    if bracket is None:
        raise NoSolution(
            f"no crossing of 2*pi/{n} located inside the sweep for lambda = {lam}"
        )
    if bracket[0] == bracket[1]:
        s_star = bracket[0]
    else:
        s_star = brentq(gap, bracket[0], bracket[1], xtol=1e-15,
                        rtol=4.0 * np.finfo(float).eps)
    pressure = pressure_at_fraction(params, float(s_star))
    t_star = _period_quadrature(params, pressure, quad_tol)
    if abs(t_star - target) > tol:
        raise NoSolution(
            f"refinement stalled: |T - 2*pi/{n}| = {abs(t_star - target):.3e} > {tol}"
        )
    x_minus, x_plus = turning_points(params, pressure)
    return EllipticOrbit(params, pressure, x_minus, x_plus, t_star)


def reconstruct_profile(
    params: Params,
    pressure: float,
    n: int,
    samples: int = 1024,
    *,
    closure_tol: float = 1e-8,
    tol: float = 1e-11,
) -> SolutionProfile:
    """Integrate the orbit at a 2*pi/n level into a closed angular profile.

    Starts from the upper turning point (x_plus, 0), samples theta uniformly
    over [0, 2*pi] (``samples`` subintervals, endpoint included), verifies the
    profile closes within ``closure_tol`` relative to its magnitude, and
    checks the winding by counting the maxima of psi.  The extremal pressure
    reconstructs to the constant pure-rotation profile.
    """
    if samples < 16:
        raise DomainError("need at least 16 samples")
    center, p_c = elliptic_center(params)
    if abs(pressure - p_c) <= 8.0 * np.finfo(float).eps * abs(p_c):
        theta = np.linspace(0.0, TWO_PI, samples + 1)
        psi = np.full(samples + 1, center.x)
        dpsi = np.zeros(samples + 1)
        return SolutionProfile(
            params.lam, params.bernoulli, p_c, 0, theta, psi, dpsi, "rotation"
        )

    _x_minus, x_plus = turning_points(params, pressure)
    traj = integrate_orbit(
        params, PhaseState(x_plus, 0.0), TWO_PI, tol, n_samples=samples + 1
    )
    profile = SolutionProfile(
        params.lam,
        params.bernoulli,
        float(pressure),
        int(n),
        traj.theta,
        traj.x,
        traj.y,
    )
    if not profile.is_closed(closure_tol):
        raise ClosureFailure(
            f"profile mismatch {profile.closure_error():.3e} exceeds "
            f"{closure_tol:.1e} x scale {profile.scale():.3e}; "
            f"P = {pressure} is not a 2*pi/{n} level"
        )
    found = profile.n_maxima()
    if found != n:
        raise ClosureFailure(
            f"winding mismatch: counted {found} maxima, expected {n}"
        )
    profile.type_tag = classify_profile(profile)
    return profile


def classify_profile(profile: SolutionProfile) -> str:
    """Type-tag a closed profile by the zero set of psi.

    ``rotation`` for constant psi; ``elliptic`` when psi never reaches zero;
    ``hyperbolic`` for two or more zeros (sign changes or threshold-tangencies)
    and ``parabolic`` for exactly one.  Values below 1e-9 times the profile
    magnitude count as zero.
    """
    psi = np.asarray(profile.psi, dtype=float)[:-1]
    scale = max(float(np.max(np.abs(psi))), 1e-300)
    zthr = ZERO_THRESHOLD * scale
    if float(np.ptp(psi)) <= zthr:
        return "rotation"
    if float(psi.min()) > zthr:
        return "elliptic"
    zeros = _count_zero_events(psi, zthr)
    return "hyperbolic" if zeros >= 2 else "parabolic"


def _count_zero_events(psi: np.ndarray, zthr: float) -> int:
    """Zeros of a cyclically sampled function: sign changes plus tangent touches."""
    tokens = np.where(np.abs(psi) <= zthr, 0, np.sign(psi)).astype(int)
    compressed = [t for i, t in enumerate(tokens) if i == 0 or t != tokens[i - 1]]
    if len(compressed) > 1 and compressed[0] == compressed[-1]:
        compressed.pop()
    if compressed == [0]:
        return 0  # identically zero within threshold: treated upstream
    count = 0
    m = len(compressed)
    for i in range(m):
        a, b = compressed[i], compressed[(i + 1) % m]
        if a == 0:
            count += 1  # one tangential/threshold zero region
        elif a * b < 0:
            count += 1  # transversal sign change
    return count


def conjugate_dual(profile: SolutionProfile, samples: int | None = None) -> SolutionProfile:
    """Map a profile through the exponent-inverting conjugacy.

    The image of psi at exponent lam is theta -> psi(theta/lam)^(1/lam) at the
    dual exponent 1/lam, with the derivative carried along analytically.  The
    dual's pressure is recovered from its own (constant) pressure residual and
    its Bernoulli constant from the conserved-quantity formula; neither is
    prescribed a priori.  Requires min psi > 0 (fractional powers), and for a
    source with lam < 1 the samples must close up since the dual then reads
    the source beyond one period.
    """
    lam_s = float(profile.lam)
    if abs(lam_s - 1.0) < 1e-12 or lam_s <= 0.0:
        raise DomainError("conjugacy requires lambda > 0, lambda != 1")
    psi_min = float(np.min(profile.psi))
    if psi_min <= ZERO_THRESHOLD * profile.scale():
        raise DomainError("conjugacy requires min psi > 0 (fractional powers)")
    lam_d = 1.0 / lam_s
    n_pts = int(samples) if samples is not None else profile.theta.size - 1
    theta_d = np.linspace(0.0, TWO_PI, n_pts + 1)
    args = theta_d / lam_s

    if lam_s < 1.0 and not profile.is_closed():
        raise DomainError(
            "dual of a lambda < 1 profile reads beyond one period; "
            "source samples must close up"
        )
    psi_f = periodic_interpolator(profile.theta, profile.psi)
    dpsi_f = periodic_interpolator(profile.theta, profile.psi_prime)
    base = psi_f(args)
    dbase = dpsi_f(args)
    psi_d = base ** lam_d
    dpsi_d = base ** (lam_d - 1.0) * dbase / (lam_s * lam_s)

    dual = SolutionProfile(lam_d, math.nan, math.nan, 0, theta_d, psi_d, dpsi_d)
    residual = pressure_residual_profile(lam_d, dual)
    dual.pressure = float(np.mean(residual))
    b_vals = (
        2.0 * dual.pressure + lam_d * lam_d * psi_d**2 + dpsi_d**2
    ) * psi_d ** (2.0 / lam_d - 2.0)
    dual.bernoulli = float(np.mean(b_vals))
    dual.winding = dual.n_maxima()
    dual.type_tag = classify_profile(dual)
    return dual


def monge_ampere_count(
    alpha: float, mode: str = "table"
) -> tuple[float, ClassificationResult]:
    """Count 2*pi-periodic homogeneous profiles for det D^2 u = |x|^alpha.

    The obstruction problem at homogeneity alpha > -2 reduces to the B = +1
    phase system at lam = 2 + alpha/2 (so 2*lam = 4 + alpha exactly), and the
    answer is the cardinality of the integers strictly inside
    (2, sqrt(4 + alpha)); alpha = 0 maps to the isochronous continuum.
    """
    alpha = float(alpha)
    if not alpha > -2.0:
        raise DomainError(f"alpha must exceed -2, got {alpha}")
    lam = 2.0 + alpha / 2.0
    return lam, count_elliptic(lam, 1, mode)
