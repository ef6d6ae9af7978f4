"""Differentiation and interpolation on uniform angular grids."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

TWO_PI = 2.0 * np.pi


def uniform_spacing(theta: np.ndarray) -> float:
    """Return the grid step of a uniformly spaced array, validating uniformity."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 4:
        raise ValueError("need a 1-D grid with at least 4 points")
    steps = np.diff(theta)
    h = steps.mean()
    if h <= 0 or np.any(np.abs(steps - h) > 1e-9 * max(abs(h), 1e-30)):
        raise ValueError("grid is not uniformly spaced")
    return float(h)


def derivative_periodic(values: np.ndarray, spacing: float) -> np.ndarray:
    """Spectral first derivative of samples of a periodic function.

    The samples must cover exactly one period without the duplicate endpoint.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    k = np.fft.fftfreq(n, d=spacing / TWO_PI)
    if n % 2 == 0:
        k[n // 2] = 0.0  # derivative of the unresolved Nyquist mode
    return np.real(np.fft.ifft(1j * k * np.fft.fft(values)))


def _onesided_weights(offsets: np.ndarray) -> np.ndarray:
    """First-derivative weights at offset 0 for nodes at the given integer offsets."""
    m = offsets.size
    a = np.vander(offsets.astype(float), m, increasing=True).T
    rhs = np.zeros(m)
    rhs[1] = 1.0
    return np.linalg.solve(a, rhs)


def derivative_uniform(values: np.ndarray, spacing: float) -> np.ndarray:
    """Sixth-order first derivative on a uniform grid, one-sided at the ends."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 8:
        raise ValueError("need at least 8 samples for the sixth-order stencil")
    out = np.empty_like(values)
    c = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    interior = sum(c[j] * values[j : n - 6 + j] for j in range(7))
    out[3 : n - 3] = interior
    for i in range(3):
        w = _onesided_weights(np.arange(7) - i)
        out[i] = w @ values[:7]
        w = _onesided_weights(np.arange(-6, 1) + i)
        out[n - 1 - i] = w @ values[n - 7 :]
    return out / spacing


def periodic_interpolator(theta: np.ndarray, values: np.ndarray):
    """Cubic-spline interpolant of a 2*pi-periodic sampled function.

    ``theta`` must be uniform on [0, 2*pi] including the duplicate endpoint;
    the returned callable accepts any angle and wraps it into the base period.
    """
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    if abs((theta[-1] - theta[0]) - TWO_PI) > 1e-9:
        raise ValueError("samples must span exactly one period")
    closed = values.copy()
    closed[-1] = closed[0]  # enforce exact closure for the periodic spline
    spline = CubicSpline(theta, closed, bc_type="periodic")

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        return spline(theta[0] + np.mod(t - theta[0], TWO_PI))

    return evaluate
