"""Text formats: operator and functional grammars, INI files, CSV / JSON-lines output.

Operator grammar (case-insensitive)::

    family:key=value,key=value
    sep(factor;factor[;factor])

with families ``dpow(n)``, ``expshift(alpha,gamma)``, ``fracd(gamma)``,
``fraclap(gamma)``, ``sobolev(alpha,gamma)``, ``harmonic(k0)``, ``modd(k0)``,
``matern(beta,eps[,kmax])`` and ``compact(eps[,beta][,coeffs][,kmax])``.
A bare token after a value extends that value into a list, so
``harmonic:k0=1,2`` and ``fourier:k=1,2,part=re`` carry 2-d frequencies.

Functional grammar::

    spatial:x=...[,y=...,z=...]
    fourier:k=...[,...],part=re|im
    profile:file=PATH

Profile files hold a header line ``dim n`` followed by ``n^dim`` whitespace
separated reals in row-major order (first axis slowest).
"""

from __future__ import annotations

import configparser
import json
import os
import re
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .fourier import DEFAULT_BANDWIDTH, GridFunction, SymbolTable, analyze, synthesize
from .measurements import Fourier, Functional, Profile, Spatial, measure
from .operators import (
    DerivativePower,
    ExponentialShift,
    FractionalDerivative,
    FractionalLaplacian,
    HarmonicPair,
    ModulatedDerivative,
    Operator,
    RadialGreen,
    Separable,
    Sobolev,
)
from .radial import CompactPolynomial, Matern
from .solver import Diagnostics, ReconProblem, Solution
from .splines import Innovations, Spline, spline_table

# -- key/value lists ------------------------------------------------------------


def _parse_params(body: str, what: str) -> dict[str, list[str]]:
    params: dict[str, list[str]] = {}
    last = None
    body = body.strip()
    if not body:
        return params
    for tok in body.split(","):
        tok = tok.strip()
        if "=" in tok:
            key, val = (s.strip() for s in tok.split("=", 1))
            key = key.lower()
            if not key or key in params:
                raise ValidationError(f"{what}: empty or repeated key {key!r}")
            params[key] = [val] if val else []
            last = key
        elif last is not None and tok:
            params[last].append(tok)
        else:
            raise ValidationError(f"{what}: cannot parse {tok!r}")
    return params


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _num(vals: list[str], key: str, what: str, kind=float):
    if len(vals) != 1:
        raise ValidationError(f"{what}: {key} takes a single value")
    try:
        x = kind(vals[0])
    except ValueError:
        raise ValidationError(f"{what}: {key}={vals[0]!r} is not a number") from None
    if kind is float and not np.isfinite(x):
        raise ValidationError(f"{what}: {key} must be finite")
    return x


def _ints(vals: list[str], key: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in vals)
    except ValueError:
        raise ValidationError(f"{what}: {key} must be integers") from None


# -- operators ----------------------------------------------------------------

_OP_KEYS = {
    "dpow": ({"n"}, set()),
    "expshift": ({"alpha", "gamma"}, set()),
    "fracd": ({"gamma"}, set()),
    "fraclap": ({"gamma"}, set()),
    "sobolev": ({"alpha", "gamma"}, set()),
    "harmonic": ({"k0"}, set()),
    "modd": ({"k0"}, set()),
    "matern": ({"beta", "eps"}, {"kmax"}),
    "compact": ({"eps"}, {"beta", "coeffs", "kmax"}),
}
_ONE_D = {"dpow", "expshift", "fracd", "modd", "matern", "compact"}


def parse_operator(text: str, dim: int = 1) -> Operator:
    """Build an operator from its grammar string; ``dim`` applies to isotropic families."""
    src = text.strip()
    low = src.lower()
    m = re.fullmatch(r"sep\((.*)\)", low, flags=re.S)
    if m:
        parts = [p for p in m.group(1).split(";")]
        if len(parts) < 1 or any(not p.strip() for p in parts):
            raise ValidationError(f"bad separable operator {text!r}")
        factors = tuple(parse_operator(p, 1) for p in parts)
        try:
            op = Separable(factors)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if op.dim != dim:
            raise ValidationError(f"separable operator has {op.dim} factors but dim={dim}")
        return op
    fam, _, body = low.partition(":")
    fam = fam.strip()
    if fam not in _OP_KEYS:
        raise ValidationError(f"unknown operator family {fam!r}")
    need, optional = _OP_KEYS[fam]
    p = _parse_params(body, fam)
    unknown = set(p) - need - optional
    if unknown:
        raise ValidationError(f"{fam}: unknown keys {sorted(unknown)}")
    missing = need - set(p)
    if missing:
        raise ValidationError(f"{fam}: missing keys {sorted(missing)}")
    if fam in _ONE_D and dim != 1:
        raise ValidationError(f"{fam} is one-dimensional (use sep(...) for products)")
    f = lambda k: _num(p[k], k, fam)  # noqa: E731
    try:
        if fam == "dpow":
            return DerivativePower(_num(p["n"], "n", fam, int))
        if fam == "expshift":
            return ExponentialShift(f("alpha"), f("gamma"))
        if fam == "fracd":
            return FractionalDerivative(f("gamma"))
        if fam == "fraclap":
            return FractionalLaplacian(f("gamma"), dim=dim)
        if fam == "sobolev":
            return Sobolev(f("alpha"), f("gamma"), dim=dim)
        if fam == "harmonic":
            k0 = _ints(p["k0"], "k0", fam)
            return HarmonicPair(k0 if len(k0) > 1 else k0[0], dim=dim)
        if fam == "modd":
            return ModulatedDerivative(_num(p["k0"], "k0", fam, int))
        kmax = _num(p["kmax"], "kmax", fam, int) if "kmax" in p else 2048
        if fam == "matern":
            return RadialGreen(Matern(f("beta")), f("eps"), kmax=kmax)
        coeffs = [float(v) for v in p["coeffs"]] if "coeffs" in p else None
        prof = CompactPolynomial(coeffs) if coeffs else CompactPolynomial((1.0, 0.0, -10.0, 20.0, -15.0, 4.0))
        beta = f("beta") if "beta" in p else None
        return RadialGreen(prof, f("eps"), beta=beta, kmax=kmax)
    except ValidationError:
        raise
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{fam}: {exc}") from None


def format_operator(op: Operator) -> str:
    """Canonical grammar string; ``parse_operator(format_operator(op), op.dim)`` rebuilds it."""
    if isinstance(op, Separable):
        return "sep(" + ";".join(format_operator(f) for f in op.factors) + ")"
    if isinstance(op, DerivativePower):
        return f"dpow:n={op.n}"
    if isinstance(op, ExponentialShift):
        return f"expshift:alpha={_fmt(op.alpha)},gamma={_fmt(op.gamma)}"
    if isinstance(op, FractionalDerivative):
        return f"fracd:gamma={_fmt(op.gamma)}"
    if isinstance(op, FractionalLaplacian):
        return f"fraclap:gamma={_fmt(op.gamma)}"
    if isinstance(op, Sobolev):
        return f"sobolev:alpha={_fmt(op.alpha)},gamma={_fmt(op.gamma)}"
    if isinstance(op, HarmonicPair):
        return "harmonic:k0=" + ",".join(str(v) for v in op.k0)
    if isinstance(op, ModulatedDerivative):
        return f"modd:k0={op.k0}"
    if isinstance(op, RadialGreen):
        tail = "" if op.kmax == 2048 else f",kmax={op.kmax}"
        if isinstance(op.profile, Matern):
            return f"matern:beta={_fmt(op.profile.beta)},eps={_fmt(op.epsilon)}{tail}"
        if isinstance(op.profile, CompactPolynomial):
            cs = ",".join(_fmt(c) for c in op.profile.coeffs)
            beta = "" if op.beta is None else f",beta={_fmt(op.beta)}"
            return f"compact:eps={_fmt(op.epsilon)}{beta},coeffs={cs}{tail}"
    raise ValidationError(f"operator {op!r} has no text form")


# -- functionals ----------------------------------------------------------------


def read_grid(path) -> GridFunction:
    """Read a ``dim n`` header followed by ``n^dim`` reals."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read profile file {path}: {exc}") from None
    tokens = text.split()
    try:
        dim, n = int(tokens[0]), int(tokens[1])
        vals = np.array([float(t) for t in tokens[2:]])
    except (IndexError, ValueError):
        raise ValidationError(f"{path}: malformed grid file") from None
    if dim not in (1, 2, 3) or n < 1 or vals.size != n**dim:
        raise ValidationError(f"{path}: expected {n}^{dim} values, found {vals.size}")
    return GridFunction(vals.reshape((n,) * dim))


def write_grid(grid: GridFunction, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{grid.dim} {grid.n}\n")
        for v in grid.values.reshape(-1):
            fh.write(repr(float(v)) + "\n")


def parse_functional(text: str, dim: int, bandwidth: int | None = None, base: str | os.PathLike = ".") -> Functional:
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "profile":
        # keep the path's case
        p = _parse_params(body, kind)
        if set(p) != {"file"}:
            raise ValidationError("profile: expected exactly file=PATH")
        path = Path(base) / ",".join(p["file"])
        grid = read_grid(path)
        if grid.dim != dim:
            raise ValidationError(f"{path}: profile is {grid.dim}-d, problem is {dim}-d")
        K = bandwidth or DEFAULT_BANDWIDTH[dim]
        if grid.n < 2 * K + 1:
            raise ValidationError(f"{path}: {grid.n} samples per axis cannot resolve bandwidth {K}")
        return Profile(SymbolTable(analyze(grid, K).coeffs, hermitian=True))
    p = _parse_params(body.lower(), kind)
    if kind == "spatial":
        axes = ("x", "y", "z")[:dim]
        unknown = set(p) - set(axes)
        if unknown or set(p) != set(axes):
            raise ValidationError(f"spatial: need keys {list(axes)} for dim={dim}")
        return Spatial(tuple(_num(p[a], a, kind) for a in axes))
    if kind == "fourier":
        unknown = set(p) - {"k", "part"}
        if unknown or "k" not in p:
            raise ValidationError("fourier: keys are k and part")
        k = _ints(p["k"], "k", kind)
        if len(k) != dim:
            raise ValidationError(f"fourier: k needs {dim} components")
        part = p.get("part", ["re"])
        if len(part) != 1:
            raise ValidationError("fourier: part takes one value")
        return Fourier(k, part[0])
    raise ValidationError(f"unknown functional kind {kind!r}")


def format_functional(nu: Functional, profile_name: str | None = None) -> str:
    if isinstance(nu, Spatial):
        return "spatial:" + ",".join(f"{a}={_fmt(v)}" for a, v in zip("xyz", nu.x0))
    if isinstance(nu, Fourier):
        return "fourier:k=" + ",".join(str(v) for v in nu.k) + f",part={nu.part}"
    if isinstance(nu, Profile):
        if profile_name is None:
            raise ValidationError("profile functionals need a file name to be written")
        return f"profile:file={profile_name}"
    raise TypeError(nu)


# -- INI files --------------------------------------------------------------------


def _config() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=None, interpolation=None)
    cp.optionxform = str  # keep key case
    return cp


def _read_config(path) -> configparser.ConfigParser:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {path}")
    cp = _config()
    try:
        cp.read_string(p.read_text(), source=str(p))
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return cp


def _get(cp, section, key, path, default=None):
    if not cp.has_section(section):
        raise ValidationError(f"{path}: missing section [{section}]")
    if key not in cp[section]:
        if default is not None:
            return default
        raise ValidationError(f"{path}: missing key {key!r} in [{section}]")
    return cp[section][key]


def _floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split()], dtype=float)
    except ValueError:
        raise ValidationError(f"{what}: expected whitespace-separated numbers") from None


def _write_config(cp: configparser.ConfigParser, path) -> None:
    with open(path, "w", newline="\n") as fh:
        cp.write(fh)


def _lines(rows: Iterable[str]) -> str:
    rows = list(rows)
    return "\n" + "\n".join(rows) if rows else ""


def write_spline(spline: Spline, path) -> None:
    cp = _config()
    cp["spline"] = {
        "operator": format_operator(spline.op),
        "dim": str(spline.dim),
        "knots": _lines(" ".join(repr(float(v)) for v in x) for x in spline.innov.knots),
        "weights": _lines(repr(float(w)) for w in spline.innov.weights),
        "null": _lines(
            " ".join(str(v) for v in k) + f" {float(c.real)!r} {float(c.imag)!r}"
            for k, c in sorted(spline.null_coeffs.items())
        ),
    }
    _write_config(cp, path)


def read_spline(path) -> Spline:
    cp = _read_config(path)
    try:
        dim = int(_get(cp, "spline", "dim", path))
    except ValueError:
        raise ValidationError(f"{path}: dim must be an integer") from None
    op = parse_operator(_get(cp, "spline", "operator", path), dim)
    x = _floats(_get(cp, "spline", "knots", path, ""), "knots")
    w = _floats(_get(cp, "spline", "weights", path, ""), "weights")
    if x.size != w.size * dim:
        raise ValidationError(f"{path}: {x.size} knot coordinates for {w.size} weights in {dim}-d")
    null = {}
    for line in _get(cp, "spline", "null", path, "").strip().splitlines():
        vals = line.split()
        if len(vals) != dim + 2:
            raise ValidationError(f"{path}: null line {line!r} needs {dim} ints and re im")
        try:
            k = tuple(int(v) for v in vals[:dim])
            null[k] = complex(float(vals[dim]), float(vals[dim + 1]))
        except ValueError:
            raise ValidationError(f"{path}: bad null line {line!r}") from None
    return Spline(op, Innovations(x.reshape(-1, dim), w), null)


def write_problem(path, op: Operator, functionals: Sequence[Functional], lam: float, grid: int,
                  bandwidth: int, y=None, generator: dict | None = None) -> None:
    cp = _config()
    cp["problem"] = {
        "operator": format_operator(op),
        "dim": str(op.dim),
        "bandwidth": str(bandwidth),
        "grid": str(grid),
        "lambda": _fmt(lam),
    }
    cp["functionals"] = {f"m{i}": format_functional(nu) for i, nu in enumerate(functionals)}
    if y is not None:
        cp["data"] = {"y": _lines(repr(float(v)) for v in y)}
    if generator is not None:
        cp["generator"] = {k: str(v) for k, v in generator.items()}
    _write_config(cp, path)


def read_problem(path, lam: float | None = None):
    """Parse a problem file into a :class:`~torus_splines.solver.ReconProblem`.

    Data come from ``[data] y`` or from ``[generator]`` (``truth`` spline file,
    ``noise`` sigma, ``seed``), which measures the truth and adds Gaussian noise.
    Returns ``(problem, truth_spline_or_None)``.
    """
    cp = _read_config(path)
    base = Path(path).parent
    try:
        dim = int(_get(cp, "problem", "dim", path))
        K = int(_get(cp, "problem", "bandwidth", path, str(DEFAULT_BANDWIDTH.get(dim, 64))))
        N = int(_get(cp, "problem", "grid", path))
        lam_v = float(_get(cp, "problem", "lambda", path)) if lam is None else float(lam)
    except ValueError:
        raise ValidationError(f"{path}: dim, bandwidth, grid and lambda must be numbers") from None
    op = parse_operator(_get(cp, "problem", "operator", path), dim)
    if not cp.has_section("functionals") or not cp["functionals"]:
        raise ValidationError(f"{path}: no functionals listed")
    fs = [parse_functional(v, dim, K, base) for v in cp["functionals"].values()]
    truth = None
    if cp.has_section("data"):
        y = _floats(_get(cp, "data", "y", path), "y")
    elif cp.has_section("generator"):
        g = cp["generator"]
        if "truth" not in g:
            raise ValidationError(f"{path}: generator needs a truth spline file")
        truth = read_spline(base / g["truth"])
        if truth.dim != dim:
            raise ValidationError(f"{path}: truth spline dimension differs")
        try:
            sigma = float(g.get("noise", "0"))
            seed = int(g.get("seed", "0"))
        except ValueError:
            raise ValidationError(f"{path}: noise and seed must be numbers") from None
        table = spline_table(truth, K)
        y = np.array([measure(nu, table) for nu in fs])
        if sigma > 0:
            y = y + sigma * np.random.default_rng(seed).standard_normal(len(y))
    else:
        raise ValidationError(f"{path}: need a [data] or [generator] section")
    return ReconProblem(op, fs, y, lam_v, N, K), truth


def write_solution(path, solution, extra: dict | None = None) -> None:
    cp = _config()
    cp["solution"] = {
        "weights": _lines(repr(float(v)) for v in solution.weights),
        "null_coeffs": _lines(repr(float(v)) for v in solution.null_coeffs),
    }
    cp["diagnostics"] = {k: (repr(v) if isinstance(v, float) else str(v)) for k, v in asdict(solution.diagnostics).items()}
    if extra:
        cp["extra"] = {k: str(v) for k, v in extra.items()}
    _write_config(cp, path)


def read_solution(path):
    cp = _read_config(path)
    w = _floats(_get(cp, "solution", "weights", path, ""), "weights")
    c = _floats(_get(cp, "solution", "null_coeffs", path, ""), "null_coeffs")
    d = cp["diagnostics"] if cp.has_section("diagnostics") else {}
    try:
        diag = Diagnostics(
            objective=float(d["objective"]),
            data_fit=float(d["data_fit"]),
            reg_value=float(d["reg_value"]),
            null_penalty=float(d["null_penalty"]),
            null_residual=float(d["null_residual"]),
            iterations=int(d["iterations"]),
            converged=d["converged"] == "True",
            restarts=int(d.get("restarts", "0")),
        )
    except (KeyError, ValueError):
        raise ValidationError(f"{path}: incomplete diagnostics") from None
    return Solution(w, c, diag)


# -- grid output --------------------------------------------------------------------


def _num12(v: float) -> str:
    s = f"{v:.12f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


def _coord(v: float) -> str:
    return format(float(v), ".12g")


def grid_records(grid: GridFunction) -> list[tuple[list[str], str]]:
    """``([x, y, ...], value)`` as formatted strings, row-major (first axis slowest)."""
    ax = grid.axis()
    out = []
    for idx in np.ndindex(grid.values.shape):
        v = float(grid.values[idx])
        if not np.isfinite(v):
            raise ValidationError("cannot emit non-finite values")
        out.append(([_coord(ax[i]) for i in idx], _num12(v)))
    return out


def emit(data, fmt: str = "csv", path=None, n: int | None = None) -> str:
    """Write a grid (or a table, synthesized first) as CSV or JSON lines.

    Returns the text; when ``path`` is given it is also written there.  The
    output depends only on the values, so equal inputs give equal bytes.
    """
    grid = synthesize(data, n) if isinstance(data, SymbolTable) else data
    names = ["x", "y", "z"][: grid.dim]
    recs = grid_records(grid)
    if fmt == "csv":
        lines = [",".join(names + ["value"])]
        lines += [",".join(xs + [v]) for xs, v in recs]
    elif fmt in ("json", "jsonl", "json-lines"):
        lines = ["{" + ", ".join(f'"{a}": {x}' for a, x in zip(names, xs)) + f', "value": {v}' + "}" for xs, v in recs]
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text


def emit_rows(header: Sequence[str], rows: Sequence[Sequence[str]], fmt: str = "csv") -> str:
    """Tabular output with preformatted string cells."""
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(r) for r in rows]
    elif fmt in ("json", "jsonl", "json-lines"):
        lines = [json.dumps(dict(zip(header, r))) for r in rows]
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    return "\n".join(lines) + "\n"


def read_csv_grid(path) -> GridFunction:
    """Round-trip reader for :func:`emit` CSV output."""
    rows = Path(path).read_text().strip().splitlines()
    dim = len(rows[0].split(",")) - 1
    vals = np.array([float(r.split(",")[-1]) for r in rows[1:]])
    n = round(len(vals) ** (1 / dim))
    return GridFunction(vals.reshape((n,) * dim))
