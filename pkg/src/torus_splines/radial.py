"""Radial profiles restricted to the circle and their Fourier coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .fourier import SymbolTable, workers


def matern_radial(beta: float, r) -> np.ndarray | float:
    """Matern function of order ``beta - 1``, normalized to 1 at the origin.

    Half-integer ``beta`` (1.5, 2.5, ...) uses the exponential-times-polynomial
    closed form; other ``beta > 1`` go through the modified Bessel function.
    """
    if not beta > 1:
        raise ValueError(f"Matern profile needs beta > 1, got {beta}")
    scalar = np.isscalar(r)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    m = beta - 1.5
    if abs(m - round(m)) < 1e-12 and round(m) >= 0:
        out = _matern_half_integer(int(round(m)), r)
    else:
        nu = beta - 1.0
        z = math.sqrt(2.0 * nu) * r
        with np.errstate(invalid="ignore", over="ignore"):
            out = 2.0 ** (1.0 - nu) / gamma_fn(nu) * z**nu * kv(nu, z)
        out = np.where(z == 0, 1.0, np.nan_to_num(out, nan=0.0))
    return float(out) if scalar else out


def _matern_half_integer(k: int, r: np.ndarray) -> np.ndarray:
    # order k + 1/2
    s = math.sqrt(8 * k + 4) * r
    poly = np.zeros_like(r)
    for i in range(k + 1):
        c = math.factorial(k + i) / (math.factorial(i) * math.factorial(k - i))
        poly = poly + c * s ** (k - i)
    return np.exp(-math.sqrt(2 * k + 1) * r) * math.factorial(k) / math.factorial(2 * k) * poly


@dataclass(frozen=True)
class Matern:
    beta: float

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError(f"Matern profile needs beta > 1, got {self.beta}")

    def __call__(self, r):
        return matern_radial(self.beta, r)


@dataclass(frozen=True)
class CompactPolynomial:
    """``sum_i c_i r^i`` on ``[0, 1)``, identically zero for ``r >= 1``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("empty polynomial")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        val = np.polynomial.polynomial.polyval(r, self.coeffs)
        return np.where(r < 1.0, val, 0.0)


# (1 - r)_+^4 (4 r + 1), expanded in powers of r
WENDLAND_EXAMPLE = CompactPolynomial((1.0, 0.0, -10.0, 20.0, -15.0, 4.0))


@dataclass(frozen=True, eq=False)
class TabulatedRadial:
    """Piecewise-linear profile through ``(radii, values)``; constant past the last radius."""

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
            raise ValueError("need matching 1-d radii/values with at least two samples")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radii must be increasing and nonnegative")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    def __call__(self, r):
        return np.interp(r, self.radii, self.values)


def circle_samples(profile, epsilon: float, n: int) -> np.ndarray:
    """``g(x_j) = G(|2 sin(x_j / 2)| / epsilon)`` on ``x_j = 2 pi j / n``."""
    x = 2 * np.pi * np.arange(n) / n
    chord = np.sqrt(np.maximum(2.0 - 2.0 * np.cos(x), 0.0))
    return np.asarray(profile(chord / epsilon), dtype=float)


def radial_green_coeffs(profile, epsilon: float, K: int) -> SymbolTable:
    """Fourier coefficients of the circle restriction of a radial profile.

    Trapezoidal quadrature at ``max(4K, 4096)`` nodes (rounded up to a power of
    two).  The result is real and even.  A non-positive coefficient means the
    profile is not positive definite at this scale and raises ``ValueError``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n = 4096
    while n < 4 * K:
        n *= 2
    g = circle_samples(profile, epsilon, n)
    if not np.all(np.isfinite(g)):
        raise ValueError("profile produced non-finite samples")
    c = scipy.fft.rfft(g, workers=workers()).real[: K + 1] / n
    bad = np.flatnonzero(c <= 0)
    if bad.size:
        k = int(bad[0])
        raise ValueError(
            f"radial coefficient at k={k} is {c[k]:.3e} <= 0; profile not positive "
            f"definite at epsilon={epsilon}, K={K}"
        )
    full = np.concatenate([c[:0:-1], c])
    return SymbolTable(full.astype(complex), hermitian=True)
