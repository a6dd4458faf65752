"""Shift-invariant operators on the torus described by their Fourier symbols.

Every operator exposes its symbol ``L[k]`` on the lattice, the finite set of
frequencies where the symbol vanishes, the pseudoinverse symbol (``1 / L[k]``
off that set, ``0`` on it) and, when it makes sense, the spectral growth
exponent ``gamma`` with ``|L[k]| ~ |k|^gamma``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fourier import SymbolTable, as_freq, check_dim, lattice
from .radial import CompactPolynomial, Matern, TabulatedRadial, radial_green_coeffs

RADIAL_KMAX = 2048


class Operator:
    """Base class.  Subclasses implement ``_symbol`` (vectorized) and ``_nulls``."""

    dim: int = 1

    # -- to implement -------------------------------------------------------
    def _symbol(self, ks: Sequence[np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def _nulls(self) -> tuple[tuple[int, ...], ...]:
        return ()

    @property
    def spectral_growth(self) -> float | None:
        return None

    @property
    def is_real(self) -> bool:
        """True when ``L[-k] = conj(L[k])``, i.e. the operator maps real to real."""
        return True

    # -- shared machinery --------------------------------------------------
    @property
    def null_frequencies(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self._nulls()))

    def _check_k(self, k) -> tuple[int, ...]:
        return as_freq(k, self.dim)

    def symbol(self, k) -> complex:
        k = self._check_k(k)
        if k in set(self._nulls()):
            return 0j
        return complex(np.asarray(self._symbol([np.array(v) for v in k])).reshape(()))

    def pseudo_symbol(self, k) -> complex:
        k = self._check_k(k)
        if k in set(self._nulls()):
            return 0j
        return 1.0 / self.symbol(k)

    def _null_mask(self, K: int) -> np.ndarray:
        mask = np.zeros((2 * K + 1,) * self.dim, dtype=bool)
        for k in self._nulls():
            if all(abs(v) <= K for v in k):
                mask[tuple(v + K for v in k)] = True
        return mask

    def symbol_grid(self, K: int) -> np.ndarray:
        """Symbol sampled on ``[-K, K]^d``; exactly zero on null frequencies."""
        ks = lattice(self.dim, K)
        with np.errstate(divide="ignore", invalid="ignore"):
            L = np.broadcast_to(self._symbol(ks), (2 * K + 1,) * self.dim).astype(complex)
        L = np.array(L)
        L[self._null_mask(K)] = 0
        return L

    def pseudo_grid(self, K: int) -> np.ndarray:
        L = self.symbol_grid(K)
        mask = self._null_mask(K)
        out = np.zeros_like(L)
        out[~mask] = 1.0 / L[~mask]
        return out

    def describe(self) -> str:
        return repr(self)


def _norm2(ks) -> np.ndarray:
    out = 0
    for k in ks:
        out = out + np.asarray(k, dtype=float) ** 2
    return out


def _principal_power(z: np.ndarray, gamma: float) -> np.ndarray:
    """Principal branch ``z**gamma`` with ``0**gamma = 0``; exact for integer gamma."""
    z = np.asarray(z, dtype=complex)
    if float(gamma).is_integer():
        return z ** int(gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(z == 0, 0j, np.exp(gamma * np.log(np.where(z == 0, 1, z))))
    return out


@dataclass(frozen=True)
class DerivativePower(Operator):
    """``D^N`` with symbol ``(ik)^N``."""

    n: int
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"derivative order must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def _symbol(self, ks):
        return (1j * ks[0]) ** self.n

    def _nulls(self):
        return ((0,),)

    @property
    def spectral_growth(self):
        return float(self.n)


@dataclass(frozen=True)
class ExponentialShift(Operator):
    """``(D + alpha Id)^gamma`` with symbol ``(ik + alpha)^gamma``, principal branch."""

    alpha: float
    gamma: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.alpha < 0 and not float(self.gamma).is_integer():
            raise ValueError("negative alpha needs an integer exponent (branch cut at k=0)")

    def _symbol(self, ks):
        return _principal_power(1j * ks[0] + self.alpha, self.gamma)

    def _nulls(self):
        return ((0,),) if self.alpha == 0 else ()

    @property
    def spectral_growth(self):
        return float(self.gamma)


@dataclass(frozen=True)
class ModulatedDerivative(Operator):
    """``D - i k0 Id`` with symbol ``i(k - k0)``.  Complex-valued unless ``k0 = 0``."""

    k0: int
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if int(self.k0) != self.k0:
            raise ValueError("k0 must be an integer")
        object.__setattr__(self, "k0", int(self.k0))

    def _symbol(self, ks):
        return 1j * (ks[0] - self.k0)

    def _nulls(self):
        return ((self.k0,),)

    @property
    def spectral_growth(self):
        return 1.0

    @property
    def is_real(self):
        return self.k0 == 0


@dataclass(frozen=True)
class HarmonicPair(Operator):
    """``Delta + |k0|^2 Id`` with symbol ``|k0|^2 - |k|^2``."""

    k0: tuple[int, ...]
    dim: int = 1

    def __post_init__(self):
        check_dim(self.dim)
        object.__setattr__(self, "k0", as_freq(self.k0, self.dim))

    @property
    def radius2(self) -> int:
        return sum(v * v for v in self.k0)

    def _symbol(self, ks):
        return (self.radius2 - _norm2(ks)).astype(complex)

    def _nulls(self):
        r2 = self.radius2
        R = math.isqrt(r2)
        rng = range(-R, R + 1)
        return tuple(k for k in itertools.product(rng, repeat=self.dim) if sum(v * v for v in k) == r2)

    @property
    def spectral_growth(self):
        return 2.0


@dataclass(frozen=True)
class FractionalDerivative(Operator):
    """``D^gamma`` with symbol ``|k|^gamma exp(i pi gamma sign(k) / 2)``."""

    gamma: float
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def _symbol(self, ks):
        k = np.asarray(ks[0], dtype=float)
        return np.abs(k) ** self.gamma * np.exp(1j * np.pi * self.gamma * np.sign(k) / 2)

    def _nulls(self):
        return ((0,),)

    @property
    def spectral_growth(self):
        return float(self.gamma)


@dataclass(frozen=True)
class FractionalLaplacian(Operator):
    """``(-Delta)^(gamma/2)`` with symbol ``|k|^gamma``."""

    gamma: float
    dim: int = 1

    def __post_init__(self):
        check_dim(self.dim)
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def _symbol(self, ks):
        return (_norm2(ks) ** (self.gamma / 2)).astype(complex)

    def _nulls(self):
        return ((0,) * self.dim,)

    @property
    def spectral_growth(self):
        return float(self.gamma)


@dataclass(frozen=True)
class Sobolev(Operator):
    """``(alpha^2 Id - Delta)^(gamma/2)`` with symbol ``(alpha^2 + |k|^2)^(gamma/2)``."""

    alpha: float
    gamma: float
    dim: int = 1

    def __post_init__(self):
        check_dim(self.dim)
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero (use FractionalLaplacian)")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def _symbol(self, ks):
        return ((self.alpha**2 + _norm2(ks)) ** (self.gamma / 2)).astype(complex)

    @property
    def spectral_growth(self):
        return float(self.gamma)


@dataclass(frozen=True, eq=False)
class RadialGreen(Operator):
    """Operator whose Green's function is a radial profile restricted to the circle.

    The coefficients ``g[k]`` are computed once for ``|k| <= kmax`` and the symbol
    is ``1 / g[k]``.  ``beta`` fixes the declared growth ``2 (beta - 1/2)``; it
    defaults to the Matern order for Matern profiles and to 2.5 for compact ones.
    """

    profile: object
    epsilon: float
    beta: float | None = None
    kmax: int = RADIAL_KMAX
    dim: int = field(default=1, init=False)
    coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        beta = self.beta
        if beta is None:
            if isinstance(self.profile, Matern):
                beta = self.profile.beta
            elif isinstance(self.profile, CompactPolynomial):
                beta = 2.5
        object.__setattr__(self, "beta", beta)
        table = radial_green_coeffs(self.profile, self.epsilon, self.kmax)
        c = table.coeffs.real.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _in_range(self, ks):
        if np.max(np.abs(ks[0])) > self.kmax:
            raise ValueError(f"frequency beyond precomputed range |k| <= {self.kmax}")

    def _symbol(self, ks):
        self._in_range(ks)
        k = np.asarray(ks[0], dtype=int)
        return (1.0 / self.coeffs[k + self.kmax]).astype(complex)

    def pseudo_grid(self, K: int) -> np.ndarray:
        self._in_range([np.array([K])])
        return self.coeffs[self.kmax - K : self.kmax + K + 1].astype(complex)

    def pseudo_symbol(self, k) -> complex:
        (k,) = self._check_k(k)
        self._in_range([np.array([k])])
        return complex(self.coeffs[k + self.kmax])

    @property
    def spectral_growth(self):
        return None if self.beta is None else 2.0 * (self.beta - 0.5)

    def __repr__(self):
        return f"RadialGreen(profile={self.profile!r}, epsilon={self.epsilon}, beta={self.beta})"


@dataclass(frozen=True)
class Separable(Operator):
    """Tensor product ``L_1 x ... x L_d`` of one-dimensional factors, one per axis."""

    factors: tuple[Operator, ...]

    def __post_init__(self):
        fs = tuple(self.factors)
        object.__setattr__(self, "factors", fs)
        check_dim(len(fs))
        for f in fs:
            if f.dim != 1:
                raise ValueError("separable factors must be one-dimensional")
            if f.null_frequencies:
                raise ValueError(
                    f"factor {f!r} has null frequencies; the product would have an "
                    "infinite-dimensional null space"
                )

    @property
    def dim(self) -> int:  # type: ignore[override]
        return len(self.factors)

    def _symbol(self, ks):
        out = 1
        for f, k in zip(self.factors, ks):
            out = out * f._symbol([k])
        return out

    def pseudo_grid(self, K: int) -> np.ndarray:
        out = np.ones((1,) * self.dim, dtype=complex)
        for a, f in enumerate(self.factors):
            shape = [1] * self.dim
            shape[a] = 2 * K + 1
            out = out * f.pseudo_grid(K).reshape(shape)
        return out

    @property
    def is_real(self):
        return all(f.is_real for f in self.factors)


@dataclass(frozen=True)
class PseudoinverseReport:
    """Largest per-frequency deviations from the four pseudoinverse relations."""

    lpl: float
    plp: float
    lp_imag: float
    pl_imag: float

    @property
    def worst(self) -> float:
        return max(self.lpl, self.plp, self.lp_imag, self.pl_imag)

    def ok(self, tol: float = 1e-12) -> bool:
        return self.worst <= tol


def verify_pseudoinverse(op: Operator, K: int, pseudo: np.ndarray | None = None) -> PseudoinverseReport:
    """Check ``L p L = L``, ``p L p = p`` and that ``L p``, ``p L`` are real.

    Deviations are relative to the magnitude of the reference value where it
    is nonzero and absolute otherwise.  ``pseudo`` overrides the operator's own
    pseudoinverse symbol, which is how broken candidates are tested.
    """
    L = op.symbol_grid(K)
    p = op.pseudo_grid(K) if pseudo is None else np.asarray(pseudo, dtype=complex)
    if p.shape != L.shape:
        raise ValueError("pseudoinverse table has the wrong shape")

    def rel(a, ref):
        scale = np.where(np.abs(ref) > 0, np.abs(ref), 1.0)
        return float(np.max(np.abs(a - ref) / scale))

    lp = L * p
    return PseudoinverseReport(
        lpl=rel(lp * L, L),
        plp=rel(p * L * p, p),
        lp_imag=float(np.max(np.abs(lp.imag))),
        pl_imag=float(np.max(np.abs((p * L).imag))),
    )


def projector_defect(op: Operator, K: int) -> float:
    """Max over the lattice of ``|(1 - L p) - 1_{k in null set}|``; zero when exact."""
    one_minus = 1.0 - op.symbol_grid(K) * op.pseudo_grid(K)
    return float(np.max(np.abs(one_minus - op._null_mask(K))))


def green_table(op: Operator, K: int) -> SymbolTable:
    """Coefficients of the Green's function (pseudoinverse applied to the Dirac comb)."""
    return SymbolTable(op.pseudo_grid(K), hermitian=True if op.is_real else None)


__all__ = [
    "Operator",
    "DerivativePower",
    "ExponentialShift",
    "ModulatedDerivative",
    "HarmonicPair",
    "FractionalDerivative",
    "FractionalLaplacian",
    "Sobolev",
    "RadialGreen",
    "Separable",
    "PseudoinverseReport",
    "verify_pseudoinverse",
    "projector_defect",
    "green_table",
    "Matern",
    "CompactPolynomial",
    "TabulatedRadial",
]
