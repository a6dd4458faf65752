import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from torus_splines.errors import InadmissibleMeasurement, ValidationError
from torus_splines.fourier import GridFunction, SymbolTable, analyze, synthesize
from torus_splines.measurements import (
    AdmissibilityWarning,
    Fourier,
    Profile,
    Spatial,
    grid_columns,
    grid_knots,
    knot_columns,
    l2_admissible,
    measure,
    measurement_column,
    null_basis,
    null_block,
    null_coeffs_to_real,
    null_constraint_rows,
    nullspace_injectivity,
    real_to_null_coeffs,
    sampling_admissible,
)
from torus_splines.operators import (
    DerivativePower,
    ExponentialShift,
    FractionalDerivative,
    FractionalLaplacian,
    HarmonicPair,
    ModulatedDerivative,
    RadialGreen,
    Separable,
    Sobolev,
)
from torus_splines.radial import WENDLAND_EXAMPLE, Matern, TabulatedRadial
from torus_splines.splines import Innovations, Spline, spline_table

COS = SymbolTable.from_modes(1, 4, {1: 0.5, -1: 0.5})
SIN = SymbolTable.from_modes(1, 4, {1: -0.5j, -1: 0.5j})


def _smooth_box(x):
    # indicator of roughly [1, 2.5] with smooth edges
    return 0.5 * (np.tanh(8 * (x - 1.0)) - np.tanh(8 * (x - 2.5)))


# -- functionals ---------------------------------------------------------------------


def test_functional_validation():
    with pytest.raises(ValidationError):
        Fourier(0, "im")
    with pytest.raises(ValidationError):
        Fourier(1, "phase")
    with pytest.raises(ValidationError):
        Spatial((np.nan,))
    with pytest.raises(ValidationError):
        Profile(SymbolTable.from_modes(1, 2, {1: 1.0}))
    assert Fourier((2,), "imag").part == "im"


def test_measure_examples():
    assert measure(Spatial(0.0), COS) == pytest.approx(1.0)
    assert measure(Spatial(np.pi / 2), SIN) == pytest.approx(1.0)
    assert measure(Fourier(0, "re"), SymbolTable.from_modes(1, 3, {0: 2.5})) == 2.5
    assert measure(Fourier(1, "im"), SIN) == -0.5


def test_profile_matches_quadrature():
    n, K = 4096, 64
    x = 2 * np.pi * np.arange(n) / n
    prof = Profile(SymbolTable(analyze(GridFunction(_smooth_box(x)), K).coeffs, hermitian=True))
    sin = SymbolTable.from_modes(1, K, {1: -0.5j, -1: 0.5j})
    ref = quad(lambda t: _smooth_box(t) * np.sin(t), 0, 2 * np.pi, limit=200)[0] / (2 * np.pi)
    assert measure(prof, sin) == pytest.approx(ref, abs=1e-6)
    with pytest.raises(ValidationError):
        measure(prof, SymbolTable.zeros(1, K + 1))


def test_measure_is_linear():
    rng = np.random.default_rng(1)
    f = SymbolTable(rng.standard_normal(17) + 1j * rng.standard_normal(17), hermitian=True)
    g = SymbolTable(rng.standard_normal(17) + 1j * rng.standard_normal(17), hermitian=True)
    for nu in (Spatial(0.7), Fourier(3, "im")):
        assert measure(nu, 2 * f - g) == pytest.approx(2 * measure(nu, f) - measure(nu, g), abs=1e-12)


def test_spatial_sample_matches_grid():
    op = Sobolev(1.0, 2.0, dim=2)
    s = Spline(op, Innovations([[0.3, 1.0], [2.0, 4.0]], [1.0, -2.0]))
    t = spline_table(s, 16)
    g = synthesize(t, 64)
    x = g.axis()
    assert measure(Spatial((x[5], x[40])), t) == pytest.approx(g.values[5, 40], abs=1e-10)


# -- columns --------------------------------------------------------------------------


def test_measurement_column_examples():
    op = Sobolev(2.0, 2.0)
    K = 64
    k = np.arange(-K, K + 1)
    assert measurement_column(Spatial(1.3), op, 1.3, K) == pytest.approx(np.sum(1 / (4.0 + k ** 2)), abs=1e-13)
    t = 0.9
    d1 = DerivativePower(1)
    ref = (d1.pseudo_symbol(3) * np.exp(-3j * t)).real
    # a Fourier functional is fine for any operator, even one that refuses point samples
    assert measurement_column(Fourier(3, "re"), d1, t, K) == pytest.approx(ref, abs=1e-15)
    assert measurement_column(Fourier(0, "re"), DerivativePower(2), t, K) == 0.0


def test_sampling_refused_or_warned():
    with pytest.raises(InadmissibleMeasurement):
        measurement_column(Spatial(0.0), DerivativePower(1), 0.5, 16)
    with pytest.warns(AdmissibilityWarning):
        measurement_column(Spatial((0.0, 0.0)), FractionalLaplacian(1.5, dim=2), (0.5, 0.5), 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        measurement_column(Spatial(0.0), Sobolev(2.0, 2.0), 0.5, 16)


@pytest.mark.parametrize("dim,N,K", [(1, 16, 20), (2, 4, 6)])
def test_grid_columns_agree_with_direct_sums(dim, N, K):
    op = Sobolev(1.0, 2.5, dim=dim)
    fs = [Spatial((0.3,) * dim), Fourier((1,) + (0,) * (dim - 1), "im"), Fourier((2,) * dim, "re")]
    A = grid_columns(fs, op, N, K)
    B = knot_columns(fs, op, grid_knots(dim, N), K)
    assert np.max(np.abs(A - B)) < 1e-12
    j = 3
    assert A[0, j] == pytest.approx(measurement_column(fs[0], op, grid_knots(dim, N)[j], K), abs=1e-12)


def test_grid_knots_row_major():
    x = grid_knots(2, 4)
    assert x.shape == (16, 2)
    assert np.allclose(x[1], [0.0, np.pi / 2]) and np.allclose(x[4], [np.pi / 2, 0.0])


# -- null space ------------------------------------------------------------------------


def test_null_basis_and_block():
    op = HarmonicPair(2)
    assert null_basis(op) == [("cos", (2,)), ("sin", (2,))]
    assert null_basis(DerivativePower(2)) == [("const", (0,))]
    B = null_block([Spatial(0.0), Spatial(np.pi / 4), Fourier(2, "re"), Fourier(2, "im")], op)
    assert np.allclose(B, [[1, 0], [0, 1], [0.5, 0], [0, -0.5]], atol=1e-15)
    assert np.allclose(null_block([Fourier(0, "re")], DerivativePower(2)), [[1.0]])


def test_null_coefficient_round_trip():
    op = HarmonicPair((1, 1), dim=2)
    c = np.arange(1.0, len(null_basis(op)) + 1)
    assert np.allclose(null_coeffs_to_real(op, real_to_null_coeffs(op, c)), c)


def test_null_constraint_rows_match_innovation_matrix():
    op = HarmonicPair(1)
    x = np.array([[0.2], [1.5], [3.0]])
    R = null_constraint_rows(op, x)
    assert np.allclose(R, [np.cos(x[:, 0]), np.sin(x[:, 0])])


def test_nullspace_injectivity():
    assert nullspace_injectivity([Fourier(0, "re"), Spatial(1.0)], DerivativePower(2))
    assert not nullspace_injectivity([Fourier(1, "re"), Fourier(2, "im")], DerivativePower(2))
    assert nullspace_injectivity([], Sobolev(1.0, 2.0))
    assert nullspace_injectivity([Spatial(0.0), Spatial(1.0)], HarmonicPair(1))
    assert not nullspace_injectivity([Spatial(0.0), Spatial(np.pi)], HarmonicPair(1))


# -- admissibility ----------------------------------------------------------------------


def test_sampling_verdicts():
    assert str(sampling_admissible(FractionalDerivative(1.5))) == "Yes (family-override)"
    assert sampling_admissible(DerivativePower(1)).status == "No"
    assert sampling_admissible(FractionalLaplacian(1.0, dim=2)).status == "No"
    assert sampling_admissible(FractionalLaplacian(1.5, dim=2)).status == "Indeterminate"
    assert sampling_admissible(ModulatedDerivative(1)).status == "No"
    assert sampling_admissible(HarmonicPair(1)).basis == "growth-criterion"
    assert sampling_admissible(HarmonicPair((1, 0, 0), dim=3)).status == "Indeterminate"
    sep = Separable((ExponentialShift(1.0, 1.5), Sobolev(1.0, 0.8)))
    assert sampling_admissible(sep).status == "No"


def test_l2_verdicts():
    assert l2_admissible(FractionalDerivative(0.6)).status == "Yes"
    assert l2_admissible(FractionalLaplacian(1.0, dim=2)).status == "No"
    assert l2_admissible(RadialGreen(WENDLAND_EXAMPLE, 0.5)).status == "Yes"
    assert l2_admissible(FractionalDerivative(0.5)).status == "No"  # log-divergent


def test_numerical_tail_test_for_tabulated_profile():
    r = np.linspace(0, 40, 4001)
    op = RadialGreen(TabulatedRadial(r, np.exp(-r)), 1.0, beta=None, kmax=512)
    v = sampling_admissible(op)
    assert v.status == "Yes" and v.basis == "ell1-criterion"


def test_sampling_implies_l2_on_sweep():
    ops = [FractionalDerivative(g) for g in np.linspace(0.2, 3, 8)]
    ops += [FractionalLaplacian(g, dim=d) for g in np.linspace(0.4, 4, 6) for d in (2, 3)]
    ops += [RadialGreen(Matern(2.5), 0.4), Separable((Sobolev(1.0, 1.2), Sobolev(1.0, 2.0)))]
    for op in ops:
        if sampling_admissible(op).status == "Yes":
            assert l2_admissible(op).status == "Yes", op
