"""Periodic L-splines: Green's function translates plus a null-space component.

A spline with innovations ``(a_j, x_j)`` has coefficients

    f[k] = p[k] * sum_j a_j exp(-i <k, x_j>) + null[k]

where ``p`` is the pseudoinverse symbol.  It is a genuine L-spline only when the
weights are annihilated by every null frequency (``M a = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpline, ValidationError
from .fourier import GridFunction, SymbolTable, as_freq, lattice, synthesize
from .operators import Operator

TWO_PI = 2 * np.pi
KNOT_TOL = TWO_PI * 1e-9
VALID_RTOL = 1e-9


def torus_distance(x, y) -> np.ndarray:
    """Euclidean distance on the torus between point arrays of shape (..., d)."""
    diff = np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), TWO_PI)
    diff = np.minimum(diff, TWO_PI - diff)
    return np.sqrt(np.sum(diff**2, axis=-1))


@dataclass(frozen=True, eq=False)
class Innovations:
    """Knots in ``[0, 2 pi)^d`` (one row per knot) and their nonzero real weights."""

    knots: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        x = np.array(self.knots, dtype=float)
        if x.ndim == 1:
            x = x.reshape(len(w), -1) if len(w) else x.reshape(0, 1)
        if x.ndim != 2 or x.shape[0] != len(w):
            raise ValidationError(f"{x.shape[0]} knots but {len(w)} weights")
        if x.shape[1] not in (1, 2, 3):
            raise ValidationError("knots must have 1, 2 or 3 coordinates")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValidationError("knots and weights must be finite")
        if np.any(w == 0):
            raise ValidationError("innovation weights must be nonzero")
        x = np.mod(x, TWO_PI)
        for i in range(1, len(x)):
            d = torus_distance(x[:i], x[i])
            if np.min(d) < KNOT_TOL:
                j = int(np.argmin(d))
                raise ValidationError(f"knots {j} and {i} coincide on the torus")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "knots", x)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.knots.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def tv_norm(self) -> float:
        """Total variation of the innovation measure, ``sum |a_j|``."""
        return float(np.sum(np.abs(self.weights)))

    @classmethod
    def empty(cls, dim: int) -> "Innovations":
        return cls(np.zeros((0, dim)), np.zeros(0))

    def shifted(self, s) -> "Innovations":
        return Innovations(self.knots + np.asarray(s, dtype=float), self.weights)


def innovation_matrix(knots, null_freqs) -> np.ndarray:
    """``M[n, j] = exp(-i <k_n, x_j>)`` for null frequencies ``k_n`` and knots ``x_j``."""
    x = np.atleast_2d(np.asarray(knots, dtype=float))
    F = np.array([list(k) for k in null_freqs], dtype=float)
    if F.size == 0:
        return np.zeros((0, x.shape[0]), dtype=complex)
    if x.size == 0:
        return np.zeros((len(F), 0), dtype=complex)
    return np.exp(-1j * (F @ x.T))


@dataclass(frozen=True)
class Validation:
    valid: bool
    residual: float
    threshold: float

    def __bool__(self) -> bool:
        return self.valid


def validate_innovations(op: Operator, innov: Innovations) -> Validation:
    """Test the annihilation system ``|M a|_inf <= 1e-9 |a|_1``."""
    if innov.dim != op.dim:
        raise ValidationError(f"knots are {innov.dim}-d but the operator is {op.dim}-d")
    M = innovation_matrix(innov.knots, op.null_frequencies)
    res = float(np.max(np.abs(M @ innov.weights))) if M.size else 0.0
    thr = VALID_RTOL * innov.tv_norm
    return Validation(res <= thr, res, thr)


def _hermitian_null(op: Operator, coeffs: dict) -> dict:
    nulls = set(op.null_frequencies)
    out = {}
    for k, v in coeffs.items():
        k = as_freq(k, op.dim)
        if k not in nulls:
            raise ValidationError(f"{k} is not a null frequency of {op!r}")
        out[k] = complex(v)
    if not op.is_real:
        return out
    paired = {}
    for k, c in out.items():
        mk = tuple(-v for v in k)
        tol = 1e-12 * max(1.0, abs(c))
        if k == mk:
            if abs(c.imag) > tol:
                raise ValidationError(f"null coefficient at {k} must be real")
            paired[k] = complex(c.real)
            continue
        if mk in out:
            if abs(out[mk] - np.conj(c)) > tol:
                raise ValidationError(f"null coefficients at {k} and {mk} are not conjugate")
            if k < mk:
                continue
        paired[k] = c
        paired[mk] = complex(np.conj(c))
    return dict(sorted(paired.items()))


@dataclass(frozen=True, eq=False)
class Spline:
    """A periodic L-spline.  ``check=False`` skips the annihilation test (diagnostics only)."""

    op: Operator
    innov: Innovations
    null_coeffs: dict = field(default_factory=dict)
    check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "null_coeffs", _hermitian_null(self.op, self.null_coeffs))
        if len(self.innov) == 0 and self.innov.dim != self.op.dim:
            object.__setattr__(self, "innov", Innovations.empty(self.op.dim))
        v = validate_innovations(self.op, self.innov)
        if self.check and not v.valid:
            raise InvalidSpline(
                f"annihilation residual {v.residual:.3e} exceeds {v.threshold:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def valid(self) -> bool:
        return validate_innovations(self.op, self.innov).valid


def _comb(innov: Innovations, d: int, K: int) -> np.ndarray:
    """Coefficients of ``sum_j a_j Sha(. - x_j)``, i.e. ``sum_j a_j exp(-i <k, x_j>)``."""
    acc = np.zeros((2 * K + 1,) * d, dtype=complex)
    ks = lattice(d, K)
    for x, a in zip(innov.knots, innov.weights):
        phase = np.ones((1,) * d, dtype=complex)
        for axis in range(d):
            phase = phase * np.exp(-1j * ks[axis] * x[axis])
        acc = acc + a * phase
    return acc


def _raw_table(spline: Spline, K: int) -> np.ndarray:
    op = spline.op
    c = op.pseudo_grid(K) * _comb(spline.innov, op.dim, K)
    for k, v in spline.null_coeffs.items():
        if all(abs(t) <= K for t in k):
            c[tuple(t + K for t in k)] += v
    return c


def spline_table(spline: Spline, K: int) -> SymbolTable:
    """Fourier coefficients of the spline on ``[-K, K]^d``."""
    v = validate_innovations(spline.op, spline.innov)
    if not v.valid:
        raise InvalidSpline(f"annihilation residual {v.residual:.3e} exceeds {v.threshold:.3e}")
    return SymbolTable(_raw_table(spline, K), hermitian=True if spline.op.is_real else None)


def synthesize_spline(spline: Spline, K: int, n: int | None = None, smoothing: str = "none") -> GridFunction:
    return synthesize(spline_table(spline, K), n, smoothing)


def apply_operator(op: Operator, table: SymbolTable) -> SymbolTable:
    """Coefficients of ``L f`` (per-frequency product with the symbol)."""
    if table.dim != op.dim:
        raise ValidationError("operator and table dimensions differ")
    return SymbolTable(op.symbol_grid(table.bandwidth) * table.coeffs)


def annihilation_check(op: Operator, spline: Spline, K: int) -> float:
    """Largest ``|L[k] f[k] - sum_j a_j exp(-i <k, x_j>)|`` over ``|k|_inf <= K``.

    The null frequencies are included: there ``L f`` vanishes, so the residual
    equals ``|M a|`` and exposes weights that fail the annihilation system.
    """
    if spline.op != op and spline.op is not op:
        raise ValidationError("spline was built for a different operator")
    Lf = op.symbol_grid(K) * _raw_table(spline, K)
    return float(np.max(np.abs(Lf - _comb(spline.innov, op.dim, K))))
