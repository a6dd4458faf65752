"""Reconstruction from linear measurements.

The TV problem is discretized on the knot grid ``t_i = 2 pi i / N``:

    minimize  |y - A a - B c|^2 + lam |a|_1 + rho |M a|^2

where ``A`` holds the measurements of Green's function translates, ``B`` those
of the real null-space basis and ``M`` the real annihilation rows.  It is solved
by FISTA with monotone restarts.  The quadratic (Tikhonov) baseline has a
closed-form kernel expansion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.fft
import scipy.linalg

from .errors import SolverError, ValidationError
from .fourier import SymbolTable, workers
from .measurements import (
    Functional,
    grid_columns,
    grid_knots,
    knot_columns,
    null_basis,
    null_block,
    null_constraint_rows,
    nullspace_injectivity,
    real_to_null_coeffs,
)
from .operators import Operator
from .splines import Innovations, Spline, torus_distance

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReconProblem:
    op: Operator
    functionals: tuple
    y: np.ndarray
    lam: float
    grid: int
    bandwidth: int

    def __post_init__(self):
        fs = tuple(self.functionals)
        y = np.array(self.y, dtype=float).reshape(-1)
        y.setflags(write=False)
        object.__setattr__(self, "functionals", fs)
        object.__setattr__(self, "y", y)
        if len(fs) != len(y):
            raise ValidationError(f"{len(fs)} functionals but {len(y)} data values")
        if not np.all(np.isfinite(y)):
            raise SolverError("data vector has non-finite entries")
        if not self.lam > 0:
            raise ValidationError(f"lambda must be positive, got {self.lam}")
        if self.grid < 1 or self.bandwidth < 1:
            raise ValidationError("grid and bandwidth must be positive")
        if not self.op.is_real:
            raise ValidationError("reconstruction needs an operator that maps real to real")
        for nu in fs:
            if nu.dim != self.op.dim:
                raise ValidationError("functional and operator dimensions differ")
        if len(fs) < len(self.op.null_frequencies):
            raise ValidationError("fewer measurements than null-space dimension")
        if not nullspace_injectivity(fs, self.op):
            raise ValidationError("measurements do not separate the null space")

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def knots(self) -> np.ndarray:
        return grid_knots(self.dim, self.grid)

    def with_lambda(self, lam: float) -> "ReconProblem":
        return replace(self, lam=lam)


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 50000
    rel_tol: float = 1e-9
    null_penalty: float = 1e6
    power_iters: int = 50
    safety: float = 0.95
    patience: int = 100

    def __post_init__(self):
        if self.max_iter < 1 or self.power_iters < 1 or self.patience < 1:
            raise ValidationError("iteration counts must be positive")
        if not (self.rel_tol > 0 and self.null_penalty >= 0 and 0 < self.safety <= 1):
            raise ValidationError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class System:
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray


@dataclass(frozen=True)
class Objective:
    objective: float
    data_fit: float
    reg_value: float


@dataclass(frozen=True)
class Diagnostics:
    objective: float
    data_fit: float
    reg_value: float
    null_penalty: float
    null_residual: float
    iterations: int
    converged: bool
    restarts: int = 0


@dataclass(frozen=True, eq=False)
class Solution:
    weights: np.ndarray
    null_coeffs: np.ndarray
    diagnostics: Diagnostics
    history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)


def build_system(problem: ReconProblem) -> System:
    """Dense measurement matrices for the grid-discretized problem."""
    A = grid_columns(problem.functionals, problem.op, problem.grid, problem.bandwidth)
    B = null_block(problem.functionals, problem.op)
    M = null_constraint_rows(problem.op, problem.knots)
    return System(A, B, M)


def objective(problem: ReconProblem, a, c, system: System | None = None) -> Objective:
    """Data fit, regularizer ``|a|_1`` and their weighted sum (null penalty excluded)."""
    s = build_system(problem) if system is None else system
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    r = problem.y - s.A @ a - s.B @ c
    fit = float(r @ r)
    reg = float(np.sum(np.abs(a)))
    return Objective(fit + problem.lam * reg, fit, reg)


def lambda_max(problem: ReconProblem, system: System | None = None) -> float:
    """Smallest ``lam`` for which ``a = 0`` (best null-space fit) is optimal."""
    s = build_system(problem) if system is None else system
    r = problem.y.copy()
    if s.B.shape[1]:
        c, *_ = np.linalg.lstsq(s.B, problem.y, rcond=None)
        r = problem.y - s.B @ c
    return float(np.max(np.abs(2 * s.A.T @ r))) if s.A.size else 0.0


def _lipschitz(s: System, rho: float, iters: int) -> float:
    """``2 |[A B; sqrt(rho) M 0]|_2^2`` by power iteration from a fixed start."""
    n, q = s.A.shape[1], s.B.shape[1]
    v = np.linspace(1.0, 2.0, n + q)
    v /= np.linalg.norm(v)
    sr = np.sqrt(rho)
    est = 0.0
    for _ in range(iters):
        a, c = v[:n], v[n:]
        top = s.A @ a + s.B @ c
        bot = sr * (s.M @ a)
        w = np.concatenate([s.A.T @ top + sr * (s.M.T @ bot), s.B.T @ top])
        est = float(np.linalg.norm(w))
        if est == 0 or not np.isfinite(est):
            break
        v = w / est
    return 2.0 * est


class _Smooth:
    """Smooth part ``|y - A a - B c|^2 + rho |M a|^2`` and its gradient."""

    def __init__(self, problem: ReconProblem, s: System, rho: float):
        self.y, self.s, self.rho = problem.y, s, rho
        self.n = s.A.shape[1]

    def value_grad(self, z):
        a, c = z[: self.n], z[self.n :]
        r = self.y - self.s.A @ a - self.s.B @ c
        Ma = self.s.M @ a
        val = float(r @ r) + self.rho * float(Ma @ Ma)
        ga = -2 * (self.s.A.T @ r) + 2 * self.rho * (self.s.M.T @ Ma)
        gc = -2 * (self.s.B.T @ r)
        return val, np.concatenate([ga, gc])

    def value(self, z):
        a, c = z[: self.n], z[self.n :]
        r = self.y - self.s.A @ a - self.s.B @ c
        Ma = self.s.M @ a
        return float(r @ r) + self.rho * float(Ma @ Ma)


def _prox(z, n, thr):
    out = z.copy()
    a = z[:n]
    out[:n] = np.sign(a) * np.maximum(np.abs(a) - thr, 0.0)
    return out


def _plain_step(f: _Smooth, z, n, lam, step):
    """Proximal step from ``z``, halving ``step`` until the quadratic majorizer holds."""
    fz, g = f.value_grad(z)
    while True:
        x = _prox(z - step * g, n, lam * step)
        dx = x - z
        bound = fz + g @ dx + (dx @ dx) / (2 * step)
        fx = f.value(x)
        if fx <= bound + 1e-12 * max(abs(fz), 1e-300):
            return x, fx + lam * float(np.sum(np.abs(x[:n]))), step
        step *= 0.5
        if step < 1e-300:
            raise SolverError("step size collapsed; the Lipschitz estimate is unusable")


def _finish(problem, s, z, rho, iters, converged, restarts, history) -> Solution:
    n = s.A.shape[1]
    a, c = z[:n].copy(), z[n:].copy()
    obj = objective(problem, a, c, s)
    Ma = s.M @ a
    diag = Diagnostics(
        objective=obj.objective,
        data_fit=obj.data_fit,
        reg_value=obj.reg_value,
        null_penalty=rho * float(Ma @ Ma),
        null_residual=float(np.max(np.abs(Ma))) if Ma.size else 0.0,
        iterations=iters,
        converged=converged,
        restarts=restarts,
    )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c))):
        raise SolverError("iterates became non-finite")
    return Solution(a, c, diag, np.asarray(history))


def solve_tv(problem: ReconProblem, config: SolverConfig | None = None, system: System | None = None) -> Solution:
    """Accelerated proximal gradient on the penalized basis-pursuit problem.

    The recorded objective (including the null penalty) never increases: when a
    momentum step would raise it the momentum is reset and a plain proximal step
    is taken instead.  Convergence is declared after ``patience`` consecutive
    iterations whose relative decrease is below ``rel_tol``.
    """
    cfg = config or SolverConfig()
    s = build_system(problem) if system is None else system
    rho = cfg.null_penalty
    n, q = s.A.shape[1], s.B.shape[1]
    L = _lipschitz(s, rho, cfg.power_iters)
    if not (np.isfinite(L) and L > 0):
        raise SolverError(f"degenerate Lipschitz estimate {L}")
    step = cfg.safety / L
    f = _Smooth(problem, s, rho)
    lam = problem.lam

    def F(z):
        return f.value(z) + lam * float(np.sum(np.abs(z[:n])))

    z = np.zeros(n + q)
    Fz = F(z)
    x_prev = z.copy()
    yk = z.copy()
    t = 1.0
    history = [Fz]
    restarts = 0
    converged = False
    it = 0
    W = cfg.patience
    for it in range(1, cfg.max_iter + 1):
        _, g = f.value_grad(yk)
        x = _prox(yk - step * g, n, lam * step)
        Fx = F(x)
        if Fx > Fz:
            # momentum overshoot: restart with a plain step from the last iterate
            restarts += 1
            t = 1.0
            x, Fx, step = _plain_step(f, z, n, lam, step)
            if Fx > Fz:
                x, Fx = z, Fz
            x_prev = z
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        yk = x + ((t - 1) / t_next) * (x - x_prev)
        x_prev, z, Fz, t = x, x, Fx, t_next
        history.append(Fz)
        if it >= W and history[-1 - W] - Fz <= cfg.rel_tol * abs(Fz):
            converged = True
            break
    log.debug("fista: %d iterations, %d restarts, F=%.15g", it, restarts, Fz)
    return _finish(problem, s, z, rho, it, converged, restarts, history)


def solve_reference(problem: ReconProblem, iterations: int, config: SolverConfig | None = None,
                    system: System | None = None) -> Solution:
    """Plain (non-accelerated) proximal gradient for a fixed number of iterations."""
    cfg = config or SolverConfig()
    s = build_system(problem) if system is None else system
    rho = cfg.null_penalty
    n, q = s.A.shape[1], s.B.shape[1]
    step = cfg.safety / _lipschitz(s, rho, cfg.power_iters)
    f = _Smooth(problem, s, rho)
    z = np.zeros(n + q)
    for _ in range(iterations):
        _, g = f.value_grad(z)
        z = _prox(z - step * g, n, problem.lam * step)
    return _finish(problem, s, z, rho, iterations, False, 0, [])


def optimality_gap(problem: ReconProblem, solution: Solution, config: SolverConfig | None = None,
                   system: System | None = None) -> float:
    """Worst relative violation of the subgradient conditions at the solution.

    With ``g = 2 A^T r - 2 rho M^T M a``: active coordinates need ``|g_i| = lam``
    (with the sign of ``a_i``), inactive ones ``|g_i| <= lam``.  Returned as
    ``max |g_i / lam - sign(a_i)|`` on the support and ``max(|g_i| / lam - 1, 0)``
    off it.
    """
    cfg = config or SolverConfig()
    s = build_system(problem) if system is None else system
    a, c = solution.weights, solution.null_coeffs
    r = problem.y - s.A @ a - s.B @ c
    g = 2 * s.A.T @ r - 2 * cfg.null_penalty * (s.M.T @ (s.M @ a))
    lam = problem.lam
    act = a != 0
    gap = 0.0
    if np.any(act):
        gap = max(gap, float(np.max(np.abs(g[act] / lam - np.sign(a[act])))))
    if np.any(~act):
        gap = max(gap, float(np.max(np.abs(g[~act]) / lam - 1.0)))
    return max(gap, 0.0)


def solution_table(problem: ReconProblem, solution: Solution) -> SymbolTable:
    """Coefficients of the grid solution ``sum_i a_i g(. - t_i) + p`` on the problem band."""
    op, K, N, d = problem.op, problem.bandwidth, problem.grid, problem.dim
    a = solution.weights.reshape((N,) * d)
    comb = scipy.fft.fftn(a, workers=workers())
    idx = np.ix_(*([np.arange(-K, K + 1) % N] * d))
    c = op.pseudo_grid(K) * comb[idx]
    for k, v in real_to_null_coeffs(op, solution.null_coeffs).items():
        if all(abs(t) <= K for t in k):
            c[tuple(t + K for t in k)] += v
    return SymbolTable(c, hermitian=True)


# -- Tikhonov ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TikhonovSolution:
    coeffs: np.ndarray
    null_coeffs: np.ndarray
    table: SymbolTable
    objective: float
    data_fit: float
    reg_value: float


def _duals(functionals: Sequence[Functional], K: int) -> np.ndarray:
    return np.stack([nu.dual(K).reshape(-1) for nu in functionals])


def solve_tikhonov(problem: ReconProblem) -> TikhonovSolution:
    """Unique minimizer of ``|y - nu(f)|^2 + lam |L f|_2^2`` as a kernel expansion."""
    op, K = problem.op, problem.bandwidth
    L = op.symbol_grid(K).reshape(-1)
    h = np.zeros(L.shape)
    nz = np.abs(L) > 0
    h[nz] = 1.0 / np.abs(L[nz]) ** 2
    W = _duals(problem.functionals, K)
    G = ((W * h) @ W.conj().T).real
    G = 0.5 * (G + G.T)
    B = null_block(problem.functionals, op)
    Mn, q = G.shape[0], B.shape[1]
    S = np.zeros((Mn + q, Mn + q))
    S[:Mn, :Mn] = G + problem.lam * np.eye(Mn)
    S[:Mn, Mn:] = B
    S[Mn:, :Mn] = B.T
    rhs = np.concatenate([problem.y, np.zeros(q)])
    try:
        sol = scipy.linalg.solve(S, rhs, assume_a="sym")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"Tikhonov system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("Tikhonov system produced non-finite values")
    a, c = sol[:Mn], sol[Mn:]
    coeffs = h * (a @ W.conj())
    coeffs = coeffs.reshape((2 * K + 1,) * op.dim)
    for k, v in real_to_null_coeffs(op, c).items():
        if all(abs(t) <= K for t in k):
            coeffs[tuple(t + K for t in k)] += v
    table = SymbolTable(coeffs, hermitian=True)
    fit_vec = problem.y - G @ a - B @ c
    fit = float(fit_vec @ fit_vec)
    reg = float(a @ G @ a)
    return TikhonovSolution(a, c, table, fit + problem.lam * reg, fit, reg)


def tikhonov_oracle(problem: ReconProblem) -> SymbolTable:
    """Dense least squares over all band coefficients (independent check)."""
    op, K = problem.op, problem.bandwidth
    W = _duals(problem.functionals, K)
    L = op.symbol_grid(K).reshape(-1)
    stack = np.vstack([W, np.sqrt(problem.lam) * np.diag(np.abs(L))])
    rhs = np.concatenate([problem.y, np.zeros(L.size)]).astype(complex)
    f, *_ = np.linalg.lstsq(stack, rhs, rcond=None)
    return SymbolTable(f.reshape((2 * K + 1,) * op.dim), hermitian=True)


# -- sparsification ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Extraction:
    spline: Spline
    objective: Objective
    active: int
    merged: bool
    exceeds_measurements: bool


def _components(active_idx: np.ndarray, dim: int, N: int) -> list[list[int]]:
    """Face-adjacent clusters of active grid cells (periodic wrap)."""
    act = set(int(i) for i in active_idx)
    seen: set[int] = set()
    out = []
    for start in sorted(act):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            i = stack.pop()
            comp.append(i)
            multi = np.unravel_index(i, (N,) * dim)
            for ax in range(dim):
                for step in (-1, 1):
                    nb = list(multi)
                    nb[ax] = (nb[ax] + step) % N
                    j = int(np.ravel_multi_index(nb, (N,) * dim))
                    if j in act and j not in seen:
                        seen.add(j)
                        stack.append(j)
        out.append(sorted(comp))
    return out


def _merge(a: np.ndarray, knots: np.ndarray, active: np.ndarray, dim: int, N: int):
    """Merge adjacent same-sign active cells into one knot at their weighted centroid."""
    pos = [i for i in active if a[i] > 0]
    neg = [i for i in active if a[i] < 0]
    new_x, new_s = [], []
    for group, sign in ((pos, 1.0), (neg, -1.0)):
        for comp in _components(np.array(group, dtype=int), dim, N):
            w = np.abs(a[comp])
            base = knots[comp[0]]
            # unwrap relative to the first cell so clusters across 0 stay together
            rel = np.mod(knots[comp] - base + np.pi, 2 * np.pi) - np.pi
            centroid = np.mod(base + (w @ rel) / w.sum(), 2 * np.pi)
            new_x.append(centroid)
            new_s.append(sign)
    order = np.lexsort(np.array(new_x).T[::-1]) if new_x else np.zeros(0, dtype=int)
    return np.array(new_x).reshape(-1, dim)[order], np.array(new_s)[order]


def _refit(problem: ReconProblem, knots: np.ndarray, signs: np.ndarray, B: np.ndarray):
    """Sign-fixed least squares on a fixed knot set with ``M a = 0`` exactly."""
    op = problem.op
    A_S = knot_columns(problem.functionals, op, knots, problem.bandwidth)
    R = null_constraint_rows(op, knots)
    Z = scipy.linalg.null_space(R) if R.shape[0] else np.eye(len(signs))
    H = np.hstack([A_S @ Z, B])
    rhs = H.T @ problem.y - 0.5 * problem.lam * np.concatenate([Z.T @ signs, np.zeros(B.shape[1])])
    u, *_ = np.linalg.lstsq(H.T @ H, rhs, rcond=None)
    k = Z.shape[1]
    a = Z @ u[:k]
    c = u[k:]
    r = problem.y - A_S @ a - B @ c
    fit = float(r @ r)
    reg = float(np.sum(np.abs(a)))
    return a, c, Objective(fit + problem.lam * reg, fit, reg)


def extract(problem: ReconProblem, solution: Solution, threshold: float = 1e-4) -> Extraction:
    """Sparsify a grid solution into a valid spline and refit it.

    Weights below ``threshold * max|a|`` are dropped, adjacent same-sign cells
    are merged at their centroid and the remaining weights and null-space
    coefficients are re-fitted with the annihilation system imposed exactly.
    The unmerged refit is kept instead when it scores a lower objective.
    """
    op, d, N = problem.op, problem.dim, problem.grid
    B = null_block(problem.functionals, op)
    a = solution.weights
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    active = np.flatnonzero(np.abs(a) > threshold * amax) if amax > 0 else np.zeros(0, dtype=int)
    Mcount = len(problem.functionals)

    if active.size == 0:
        if B.shape[1]:
            c, *_ = np.linalg.lstsq(B, problem.y, rcond=None)
        else:
            c = np.zeros(0)
        r = problem.y - B @ c
        obj = Objective(float(r @ r), float(r @ r), 0.0)
        spline = Spline(op, Innovations.empty(d), real_to_null_coeffs(op, c))
        return Extraction(spline, obj, 0, False, False)

    grid = problem.knots
    candidates = []
    mx, ms = _merge(a, grid, active, d, N)
    candidates.append((mx, *_refit(problem, mx, ms, B), True))
    if len(mx) != len(active):
        gx = grid[active]
        candidates.append((gx, *_refit(problem, gx, np.sign(a[active]), B), False))
    best = min(candidates, key=lambda t: t[3].objective)
    knots, w, c, obj, merged = best

    keep = np.abs(w) > 1e-12 * max(float(np.max(np.abs(w))), 1e-300)
    innov = _clean_innovations(op, knots, w, keep)
    spline = Spline(op, innov, real_to_null_coeffs(op, c))
    return Extraction(spline, obj, int(active.size), merged, len(innov) > Mcount)


def _clean_innovations(op: Operator, knots, w, keep) -> Innovations:
    x, a = knots[keep], w[keep]
    if x.shape[0] == 0:
        return Innovations.empty(op.dim)
    # drop residual duplicates (merging can land two clusters on the same point)
    out_x, out_a = [x[0]], [a[0]]
    for xi, ai in zip(x[1:], a[1:]):
        dist = torus_distance(np.array(out_x), xi)
        j = int(np.argmin(dist))
        if dist[j] < 2 * np.pi * 1e-9:
            out_a[j] += ai
        else:
            out_x.append(xi)
            out_a.append(ai)
    out_x, out_a = np.array(out_x), np.array(out_a)
    nz = out_a != 0
    return Innovations(out_x[nz], out_a[nz])


def extract_spline(problem: ReconProblem, solution: Solution, threshold: float = 1e-4) -> Spline:
    return extract(problem, solution, threshold).spline


__all__ = [
    "ReconProblem",
    "SolverConfig",
    "System",
    "Objective",
    "Diagnostics",
    "Solution",
    "TikhonovSolution",
    "Extraction",
    "build_system",
    "objective",
    "lambda_max",
    "solve_tv",
    "solve_reference",
    "optimality_gap",
    "solve_tikhonov",
    "tikhonov_oracle",
    "solution_table",
    "extract",
    "extract_spline",
    "null_basis",
]
