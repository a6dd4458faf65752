"""Truncated Fourier series on the d-torus.

Coefficients follow ``f_hat[k] = (2 pi)^-d  int f(x) exp(-i <k, x>) dx`` so that
``f = sum_k f_hat[k] e_k`` with ``e_k(x) = exp(i <k, x>)``.  A table of bandwidth
``K`` stores the lattice cube ``[-K, K]^d`` as a dense array; frequency ``k``
lives at index ``k + K`` along every axis.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.fft

MAX_DIM = 3
DEFAULT_BANDWIDTH = {1: 512, 2: 64, 3: 32}

FreqIndex = tuple[int, ...]


def workers() -> int:
    """Thread count for FFTs, capped by ``TORUS_SPLINES_THREADS``."""
    env = os.environ.get("TORUS_SPLINES_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def as_freq(k, dim: int) -> FreqIndex:
    """Normalize an int or sequence into a ``dim``-tuple of ints."""
    if np.isscalar(k):
        if dim != 1:
            raise ValueError(f"scalar frequency given for dim={dim}")
        return (int(k),)
    out = tuple(int(v) for v in k)
    if len(out) != dim:
        raise ValueError(f"frequency {out} does not have {dim} components")
    return out


def check_dim(dim: int) -> int:
    if dim not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
    return dim


def lattice(dim: int, K: int) -> list[np.ndarray]:
    """Sparse broadcastable integer grids over ``[-K, K]^dim``."""
    ax = np.arange(-K, K + 1)
    return list(np.meshgrid(*([ax] * dim), indexing="ij", sparse=True))


def lattice_norm2(dim: int, K: int) -> np.ndarray:
    ks = lattice(dim, K)
    out = np.zeros((2 * K + 1,) * dim)
    for k in ks:
        out = out + k.astype(float) ** 2
    return out


def default_grid_size(K: int) -> int:
    """Smallest power of two ``n`` with ``n >= 2K + 2``."""
    n = 2
    while n < 2 * K + 2:
        n *= 2
    return n


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """Fourier coefficients on ``[-K, K]^d``.

    ``hermitian=None`` detects the symmetry ``c[-k] = conj(c[k])`` up to
    ``1e-12 * max|c|``.  A hermitian table is symmetrized on construction so
    the relation holds exactly.
    """

    coeffs: np.ndarray
    hermitian: bool | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim not in (1, 2, 3):
            raise ValueError("coefficient array must have 1, 2 or 3 axes")
        n0 = c.shape[0]
        if any(s != n0 for s in c.shape) or n0 % 2 == 0 or n0 < 3:
            raise ValueError(f"coefficient array must be (2K+1)^d with K >= 1, got {c.shape}")
        mirror = np.conj(np.flip(c))
        herm = self.hermitian
        if herm is None:
            scale = np.max(np.abs(c)) if c.size else 0.0
            herm = bool(np.max(np.abs(c - mirror)) <= 1e-12 * scale)
        if herm:
            c = 0.5 * (c + mirror)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "hermitian", bool(herm))

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    @property
    def bandwidth(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def __getitem__(self, k) -> complex:
        k = as_freq(k, self.dim)
        K = self.bandwidth
        if any(abs(v) > K for v in k):
            return 0j
        return complex(self.coeffs[tuple(v + K for v in k)])

    def items(self) -> Iterable[tuple[FreqIndex, complex]]:
        K = self.bandwidth
        for idx in np.ndindex(self.coeffs.shape):
            yield tuple(i - K for i in idx), complex(self.coeffs[idx])

    def __add__(self, other: "SymbolTable") -> "SymbolTable":
        _check_same_shape(self, other)
        return SymbolTable(self.coeffs + other.coeffs)

    def __sub__(self, other: "SymbolTable") -> "SymbolTable":
        _check_same_shape(self, other)
        return SymbolTable(self.coeffs - other.coeffs)

    def __mul__(self, alpha) -> "SymbolTable":
        return SymbolTable(self.coeffs * alpha)

    __rmul__ = __mul__

    def truncate(self, K: int) -> "SymbolTable":
        """Restrict to a smaller bandwidth ``K``."""
        K0 = self.bandwidth
        if K > K0:
            raise ValueError(f"cannot truncate bandwidth {K0} to larger {K}")
        sl = (slice(K0 - K, K0 + K + 1),) * self.dim
        return SymbolTable(self.coeffs[sl], hermitian=self.hermitian or None)

    def shifted(self, shift) -> "SymbolTable":
        """Coefficients of ``f(. - shift)``."""
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        if shift.shape != (self.dim,):
            raise ValueError("shift must have one component per axis")
        phase = np.ones((1,) * self.dim, dtype=complex)
        for a, k in enumerate(lattice(self.dim, self.bandwidth)):
            phase = phase * np.exp(-1j * k * shift[a])
        return SymbolTable(self.coeffs * phase, hermitian=self.hermitian or None)

    @classmethod
    def zeros(cls, dim: int, K: int) -> "SymbolTable":
        check_dim(dim)
        return cls(np.zeros((2 * K + 1,) * dim, dtype=complex))

    @classmethod
    def from_modes(cls, dim: int, K: int, modes: dict) -> "SymbolTable":
        """Build a table from a sparse ``{freq: coefficient}`` mapping."""
        c = np.zeros((2 * K + 1,) * check_dim(dim), dtype=complex)
        for k, v in modes.items():
            k = as_freq(k, dim)
            if any(abs(x) > K for x in k):
                raise ValueError(f"frequency {k} outside bandwidth {K}")
            c[tuple(x + K for x in k)] = v
        return cls(c)

    @classmethod
    def dirac_comb(cls, dim: int, K: int) -> "SymbolTable":
        return cls(np.ones((2 * K + 1,) * check_dim(dim), dtype=complex))


def _check_same_shape(f: SymbolTable, g: SymbolTable) -> None:
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError(
            f"tables differ: dim {f.dim}/{g.dim}, bandwidth {f.bandwidth}/{g.bandwidth}"
        )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on the uniform grid ``x_j = 2 pi j / n`` per axis."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim not in (1, 2, 3) or any(s != v.shape[0] for s in v.shape):
            raise ValueError(f"grid values must be n^d with d <= 3, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def axis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n


def fejer_weights(dim: int, K: int) -> np.ndarray:
    """Per-axis product of triangular weights ``1 - |k_a| / (K + 1)``."""
    w = np.ones((1,) * dim)
    for k in lattice(dim, K):
        w = w * (1.0 - np.abs(k) / (K + 1))
    return w


def synthesize(table: SymbolTable, n: int | None = None, smoothing: str = "none") -> GridFunction:
    """Evaluate the truncated series of a real table on an ``n^d`` grid by FFT."""
    if not table.hermitian:
        raise ValueError("real synthesis needs a hermitian table")
    K, d = table.bandwidth, table.dim
    if n is None:
        n = default_grid_size(K)
    if not _is_pow2(n):
        raise ValueError(f"samples per axis must be a power of two, got {n}")
    if n < 2 * K + 2:
        raise ValueError(f"n={n} aliases bandwidth {K}; need n >= {2 * K + 2}")
    if smoothing == "fejer":
        c = table.coeffs * fejer_weights(d, K)
    elif smoothing == "none":
        c = table.coeffs
    else:
        raise ValueError(f"unknown smoothing {smoothing!r}")
    full = np.zeros((n,) * d, dtype=complex)
    idx = np.arange(-K, K + 1) % n
    full[np.ix_(*([idx] * d))] = c
    vals = scipy.fft.ifftn(full, workers=workers()) * float(n) ** d
    scale = np.max(np.abs(table.coeffs))
    resid = np.max(np.abs(vals.imag))
    if resid > 1e-10 * scale:
        raise ArithmeticError(f"imaginary residue {resid:.3e} after real synthesis")
    return GridFunction(vals.real)


def analyze(grid: GridFunction, K: int) -> SymbolTable:
    """Fourier coefficients ``|k|_inf <= K`` of grid samples (inverse of ``synthesize``)."""
    n, d = grid.n, grid.dim
    if n < 2 * K + 1:
        raise ValueError(f"grid of {n} samples cannot resolve bandwidth {K}")
    full = scipy.fft.fftn(grid.values, workers=workers()) / float(n) ** d
    idx = np.arange(-K, K + 1) % n
    return SymbolTable(full[np.ix_(*([idx] * d))])


def pair(f: SymbolTable, g: SymbolTable) -> complex:
    """Bilinear pairing ``(2 pi)^-d int f g``, i.e. ``sum_k f[k] g[-k]``.

    Both operand orders are summed and averaged: complex products may be fused
    differently for ``f*g`` and ``g*f``, but addition commutes exactly, so
    ``pair(f, g) == pair(g, f)`` bit for bit.
    """
    _check_same_shape(f, g)
    fg = np.sum(f.coeffs * np.flip(g.coeffs))
    gf = np.sum(g.coeffs * np.flip(f.coeffs))
    return complex((fg + gf) / 2)


def sobolev_norm(table: SymbolTable, tau: float) -> float:
    """``(sum_k (1 + |k|^2)^tau |c_k|^2)^(1/2)`` over the stored lattice."""
    w = (1.0 + lattice_norm2(table.dim, table.bandwidth)) ** tau
    return float(np.sqrt(np.sum(w * np.abs(table.coeffs) ** 2)))


def evaluate(table: SymbolTable, points: Sequence) -> np.ndarray:
    """Direct (non-FFT) evaluation of the truncated series at arbitrary points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if table.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    if pts.shape[1] != table.dim:
        raise ValueError("points must have one column per axis")
    K = table.bandwidth
    ks = np.arange(-K, K + 1)
    out = np.empty(len(pts), dtype=complex)
    for j, x in enumerate(pts):
        acc = table.coeffs
        for a in range(table.dim - 1, -1, -1):
            acc = acc @ np.exp(1j * ks * x[a])
        out[j] = acc
    return out
