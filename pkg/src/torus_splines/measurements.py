"""Linear measurement functionals and the admissibility analysis.

Each functional ``nu`` is stored through its dual coefficients
``w[k] = <nu, e_k>`` so that ``nu(f) = sum_k w[k] f[k]`` for any real ``f``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

from .errors import InadmissibleMeasurement, ValidationError
from .fourier import SymbolTable, evaluate, lattice, pair, workers
from .operators import (
    DerivativePower,
    ExponentialShift,
    FractionalDerivative,
    FractionalLaplacian,
    ModulatedDerivative,
    Operator,
    RadialGreen,
    Separable,
    Sobolev,
)
from .radial import CompactPolynomial, Matern

IMAG_TOL = 1e-10


class AdmissibilityWarning(UserWarning):
    """Raised (as a warning) when sampling admissibility could not be decided."""


# -- functionals -----------------------------------------------------------


@dataclass(frozen=True)
class Spatial:
    """Point evaluation ``f -> f(x0)``."""

    x0: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x) not in (1, 2, 3) or not all(np.isfinite(x)):
            raise ValidationError(f"bad sampling point {self.x0!r}")
        object.__setattr__(self, "x0", x)

    @property
    def dim(self) -> int:
        return len(self.x0)

    def dual(self, K: int) -> np.ndarray:
        w = np.ones((1,) * self.dim, dtype=complex)
        for a, k in enumerate(lattice(self.dim, K)):
            w = w * np.exp(1j * k * self.x0[a])
        return w

    def dual_at(self, k) -> complex:
        return complex(np.exp(1j * np.dot(k, self.x0)))


@dataclass(frozen=True)
class Fourier:
    """Real or imaginary part of the coefficient ``f[k]``."""

    k: tuple[int, ...]
    part: str = "re"

    def __post_init__(self):
        k = tuple(int(v) for v in np.atleast_1d(self.k))
        if len(k) not in (1, 2, 3):
            raise ValidationError(f"bad frequency {self.k!r}")
        part = {"re": "re", "real": "re", "im": "im", "imag": "im"}.get(str(self.part).lower())
        if part is None:
            raise ValidationError(f"part must be 're' or 'im', got {self.part!r}")
        if part == "im" and not any(k):
            raise ValidationError("imaginary part at k=0 is identically zero")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "part", part)

    @property
    def dim(self) -> int:
        return len(self.k)

    def dual_at(self, k) -> complex:
        k = tuple(k)
        mk = tuple(-v for v in self.k)
        hit, miss = float(k == self.k), float(k == mk)
        if self.part == "re":
            return (hit + miss) / 2
        return (hit - miss) / 2j

    def dual(self, K: int) -> np.ndarray:
        w = np.zeros((2 * K + 1,) * self.dim, dtype=complex)
        if any(abs(v) > K for v in self.k):
            return w
        for f in {self.k, tuple(-v for v in self.k)}:
            w[tuple(v + K for v in f)] = self.dual_at(f)
        return w


@dataclass(frozen=True, eq=False)
class Profile:
    """Pairing against a real square-integrable profile given by its coefficients."""

    table: SymbolTable

    def __post_init__(self):
        if not self.table.hermitian:
            raise ValidationError("profile table must be hermitian (real-valued profile)")

    @property
    def dim(self) -> int:
        return self.table.dim

    def dual_at(self, k) -> complex:
        return self.table[tuple(-v for v in k)]

    def dual(self, K: int) -> np.ndarray:
        Kp = self.table.bandwidth
        if K > Kp:
            raise ValidationError(f"profile bandwidth {Kp} is smaller than {K}")
        return np.flip(self.table.truncate(K).coeffs)


Functional = Spatial | Fourier | Profile


def measure(nu: Functional, table: SymbolTable) -> float:
    """Apply a functional to a real function given by its coefficient table."""
    if nu.dim != table.dim:
        raise ValidationError("functional and table dimensions differ")
    if isinstance(nu, Spatial):
        z = complex(evaluate(table, [nu.x0])[0])
        if abs(z.imag) > IMAG_TOL * max(float(np.sum(np.abs(table.coeffs))), 1e-300):
            raise ArithmeticError(f"point value has imaginary residue {z.imag:.3e}")
        return z.real
    if isinstance(nu, Fourier):
        c = table[nu.k]
        return c.real if nu.part == "re" else c.imag
    if isinstance(nu, Profile):
        if nu.table.bandwidth < table.bandwidth:
            raise ValidationError(
                f"profile bandwidth {nu.table.bandwidth} below table bandwidth {table.bandwidth}"
            )
        return pair(nu.table.truncate(table.bandwidth), table).real
    raise TypeError(f"not a functional: {nu!r}")


def _check_sampling(functionals: Sequence[Functional], op: Operator) -> None:
    if not any(isinstance(nu, Spatial) for nu in functionals):
        return
    v = sampling_admissible(op)
    if v.status == "No":
        raise InadmissibleMeasurement(f"point samples are not admissible for {op!r} ({v.basis})")
    if v.status == "Indeterminate":
        warnings.warn(
            f"sampling admissibility of {op!r} is undecided; columns are truncated sums",
            AdmissibilityWarning,
            stacklevel=3,
        )


def measurement_column(nu: Functional, op: Operator, t, K: int) -> float:
    """``<nu, g(. - t)>`` for the truncated Green's function ``g`` of ``op``."""
    if nu.dim != op.dim:
        raise ValidationError("functional and operator dimensions differ")
    _check_sampling([nu], op)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c = nu.dual(K) * op.pseudo_grid(K)
    for a, k in enumerate(lattice(op.dim, K)):
        c = c * np.exp(-1j * k * t[a])
    return float(np.sum(c).real)


def grid_columns(functionals: Sequence[Functional], op: Operator, N: int, K: int) -> np.ndarray:
    """All columns ``<nu_m, g(. - t_i)>`` over the uniform knot grid ``t_i = 2 pi i / N``.

    Rows follow ``functionals``; columns are the knots in row-major order (first
    axis slowest).  Coefficients are folded modulo ``N`` and summed by FFT.
    """
    _check_sampling(functionals, op)
    d = op.dim
    p = op.pseudo_grid(K)
    idx = np.ix_(*([np.arange(-K, K + 1) % N] * d))
    out = np.empty((len(functionals), N**d))
    for m, nu in enumerate(functionals):
        if nu.dim != d:
            raise ValidationError("functional and operator dimensions differ")
        C = np.zeros((N,) * d, dtype=complex)
        np.add.at(C, idx, nu.dual(K) * p)
        out[m] = scipy.fft.fftn(C, workers=workers()).real.reshape(-1)
    return out


def grid_knots(dim: int, N: int) -> np.ndarray:
    """Uniform knots ``2 pi i / N`` in row-major order, shape ``(N^dim, dim)``."""
    ax = 2 * np.pi * np.arange(N) / N
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def knot_columns(functionals: Sequence[Functional], op: Operator, knots, K: int) -> np.ndarray:
    """Columns ``<nu_m, g(. - x_j)>`` for arbitrary knots (direct summation)."""
    _check_sampling(functionals, op)
    x = np.atleast_2d(np.asarray(knots, dtype=float))
    d = op.dim
    p = op.pseudo_grid(K).reshape(-1)
    ks = np.stack([k.reshape(-1) for k in np.meshgrid(*([np.arange(-K, K + 1)] * d), indexing="ij")], 1)
    W = np.stack([nu.dual(K).reshape(-1) for nu in functionals]) if functionals else np.zeros((0, ks.shape[0]))
    if x.size == 0:
        return np.zeros((len(functionals), 0))
    E = np.exp(-1j * (ks @ x.T))
    return ((W * p) @ E).real


# -- null space in a real basis ---------------------------------------------


def null_basis(op: Operator) -> list[tuple[str, tuple[int, ...]]]:
    """Real trigonometric basis of the null space: ``const``, then ``cos``/``sin`` per pair."""
    seen = set()
    out = []
    for k in op.null_frequencies:
        mk = tuple(-v for v in k)
        if k in seen:
            continue
        seen.update({k, mk})
        if k == mk:
            out.append(("const", k))
        else:
            rep = max(k, mk)
            out.append(("cos", rep))
            out.append(("sin", rep))
    return out


def null_block(functionals: Sequence[Functional], op: Operator) -> np.ndarray:
    """``B[m, n] = <nu_m, b_n>`` for the real null basis ``b_n``."""
    basis = null_basis(op)
    B = np.zeros((len(functionals), len(basis)))
    for m, nu in enumerate(functionals):
        for n, (kind, k) in enumerate(basis):
            wp, wm = nu.dual_at(k), nu.dual_at(tuple(-v for v in k))
            if kind == "const":
                B[m, n] = wp.real
            elif kind == "cos":
                B[m, n] = ((wp + wm) / 2).real
            else:
                B[m, n] = ((wp - wm) / 2j).real
    return B


def null_constraint_rows(op: Operator, knots) -> np.ndarray:
    """Real rows of the annihilation system at ``knots`` (one per real basis element)."""
    x = np.atleast_2d(np.asarray(knots, dtype=float))
    basis = null_basis(op)
    R = np.zeros((len(basis), x.shape[0]))
    for n, (kind, k) in enumerate(basis):
        phase = x @ np.asarray(k, dtype=float)
        R[n] = np.sin(phase) if kind == "sin" else np.cos(phase)
    return R


def real_to_null_coeffs(op: Operator, c) -> dict:
    """Map real basis coefficients to the complex ``{freq: coefficient}`` form."""
    out = {}
    for (kind, k), v in zip(null_basis(op), np.asarray(c, dtype=float)):
        mk = tuple(-t for t in k)
        if kind == "const":
            out[k] = complex(v)
        elif kind == "cos":
            out[k] = out.get(k, 0) + v / 2
            out[mk] = out.get(mk, 0) + v / 2
        else:
            out[k] = out.get(k, 0) - 1j * v / 2
            out[mk] = out.get(mk, 0) + 1j * v / 2
    return out


def null_coeffs_to_real(op: Operator, coeffs: dict) -> np.ndarray:
    """Inverse of :func:`real_to_null_coeffs` for hermitian-paired coefficients."""
    vals = []
    for kind, k in null_basis(op):
        c = complex(coeffs.get(k, 0))
        if kind == "const":
            vals.append(c.real)
        elif kind == "cos":
            vals.append(2 * c.real)
        else:
            vals.append(-2 * c.imag)
    return np.array(vals)


def nullspace_injectivity(functionals: Sequence[Functional], op: Operator) -> bool:
    """Whether the measurements separate the null space (full column rank)."""
    nulls = op.null_frequencies
    if not nulls:
        return True
    if op.is_real:
        W = null_block(functionals, op)
    else:
        W = np.array([[nu.dual_at(k) for k in nulls] for nu in functionals], dtype=complex)
    if W.shape[0] < W.shape[1]:
        return False
    s = np.linalg.svd(W, compute_uv=False)
    if s[0] == 0:
        return False
    return int(np.sum(s > 1e-10 * s[0])) == len(nulls)


# -- admissibility -----------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityVerdict:
    status: str  # Yes | No | Indeterminate
    basis: str  # ell1-criterion | ell2-criterion | growth-criterion | family-override
    note: str = ""

    def __str__(self) -> str:
        return f"{self.status} ({self.basis})"


_ONE_D_POWER = (DerivativePower, ExponentialShift, FractionalDerivative, FractionalLaplacian, Sobolev)

TAIL_RATIO = 1.01


def _gamma(op: Operator) -> float | None:
    return op.spectral_growth


def _tail_ratio(op: Operator, power: int) -> float | None:
    """``S(2K) / S(K)`` for ``S(K) = sum_{|k|_inf <= K} |p[k]|^power``."""
    K = {1: 4096, 2: 256, 3: 32}[op.dim]
    if isinstance(op, RadialGreen):
        K = op.kmax // 2
    p = np.abs(op.pseudo_grid(2 * K)) ** power
    inner = p[(slice(K, 3 * K + 1),) * op.dim].sum()
    total = p.sum()
    if inner == 0:
        return None
    return float(total / inner)


def sampling_admissible(op: Operator) -> AdmissibilityVerdict:
    """Whether point evaluation is a valid measurement (the Green's function is continuous)."""
    d = op.dim
    if isinstance(op, Separable):
        verdicts = [sampling_admissible(f) for f in op.factors]
        if all(v.status == "Yes" for v in verdicts):
            return AdmissibilityVerdict("Yes", "family-override", "every factor admits sampling")
        if any(v.status == "No" for v in verdicts):
            return AdmissibilityVerdict("No", "family-override", "a factor rejects sampling")
        return AdmissibilityVerdict("Indeterminate", "family-override", "a factor is undecided")
    if isinstance(op, RadialGreen) and isinstance(op.profile, (Matern, CompactPolynomial)):
        return AdmissibilityVerdict("Yes", "family-override", "continuous radial Green's function")
    if isinstance(op, ModulatedDerivative):
        return AdmissibilityVerdict(
            "No", "family-override", "Green's function has a jump, as for D"
        )
    gamma = _gamma(op)
    if d == 1 and isinstance(op, _ONE_D_POWER):
        status = "Yes" if gamma > 1 else "No"
        return AdmissibilityVerdict(status, "family-override", f"1-d power family, gamma={gamma:g}")
    if d > 1 and isinstance(op, (FractionalLaplacian, Sobolev)):
        if gamma > d:
            return AdmissibilityVerdict("Yes", "family-override", f"gamma={gamma:g} > d={d}")
        if gamma <= d / 2:
            return AdmissibilityVerdict("No", "family-override", f"gamma={gamma:g} <= d/2")
        return AdmissibilityVerdict(
            "Indeterminate", "family-override", f"d/2 < gamma={gamma:g} <= d is open"
        )
    if gamma is not None:
        if gamma > d:
            return AdmissibilityVerdict("Yes", "growth-criterion", f"gamma={gamma:g} > d={d}")
        if gamma <= d / 2:
            return AdmissibilityVerdict("No", "growth-criterion", f"gamma={gamma:g} <= d/2")
    r1 = _tail_ratio(op, 1)
    if r1 is not None and r1 <= TAIL_RATIO:
        return AdmissibilityVerdict("Yes", "ell1-criterion", f"tail ratio {r1:.4f}")
    r2 = _tail_ratio(op, 2)
    if r2 is not None and r2 > TAIL_RATIO:
        return AdmissibilityVerdict("No", "ell2-criterion", f"square-sum tail ratio {r2:.4f}")
    return AdmissibilityVerdict("Indeterminate", "ell1-criterion", "no criterion fired")


def l2_admissible(op: Operator) -> AdmissibilityVerdict:
    """Whether every square-integrable profile is a valid measurement."""
    d = op.dim
    if isinstance(op, RadialGreen):
        return AdmissibilityVerdict("Yes", "family-override", "bounded radial Green's function")
    if isinstance(op, Separable):
        verdicts = [l2_admissible(f) for f in op.factors]
        if all(v.status == "Yes" for v in verdicts):
            return AdmissibilityVerdict("Yes", "family-override", "square sum factorizes")
        if any(v.status == "No" for v in verdicts):
            return AdmissibilityVerdict("No", "family-override", "a factor is not square-summable")
        return AdmissibilityVerdict("Indeterminate", "family-override", "a factor is undecided")
    gamma = _gamma(op)
    if gamma is not None:
        basis = "family-override" if isinstance(op, _ONE_D_POWER + (ModulatedDerivative,)) else "growth-criterion"
        if gamma > d / 2:
            return AdmissibilityVerdict("Yes", basis, f"gamma={gamma:g} > d/2")
        return AdmissibilityVerdict("No", basis, f"gamma={gamma:g} <= d/2")
    r2 = _tail_ratio(op, 2)
    if r2 is not None and r2 <= TAIL_RATIO:
        return AdmissibilityVerdict("Yes", "ell2-criterion", f"tail ratio {r2:.4f}")
    if r2 is not None:
        return AdmissibilityVerdict("No", "ell2-criterion", f"tail ratio {r2:.4f}")
    return AdmissibilityVerdict("Indeterminate", "ell2-criterion", "no criterion fired")
