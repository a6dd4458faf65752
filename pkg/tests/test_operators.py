import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from torus_splines.fourier import synthesize
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
    green_table,
    projector_defect,
    verify_pseudoinverse,
)
from torus_splines.radial import (
    WENDLAND_EXAMPLE,
    CompactPolynomial,
    Matern,
    TabulatedRadial,
    circle_samples,
    matern_radial,
    radial_green_coeffs,
)

CATALOG = [
    DerivativePower(1),
    DerivativePower(3),
    ExponentialShift(1.0, 1.0),
    ExponentialShift(0.5, 2.5),
    ExponentialShift(-1.0, 2.0),
    ModulatedDerivative(3),
    HarmonicPair(2),
    HarmonicPair((1, 2), dim=2),
    FractionalDerivative(0.7),
    FractionalDerivative(1.5),
    FractionalLaplacian(1.5),
    FractionalLaplacian(2.0, dim=2),
    FractionalLaplacian(3.0, dim=3),
    Sobolev(2.0, 2.0),
    Sobolev(1.0, 3.0, dim=2),
    RadialGreen(Matern(2.5), 1.0),
    RadialGreen(WENDLAND_EXAMPLE, 0.7),
    Separable((Sobolev(1.0, 2.0), ExponentialShift(1.0, 1.5))),
]


# -- symbols ------------------------------------------------------------------------


def test_symbol_examples():
    assert DerivativePower(2).symbol(3) == -9
    assert FractionalLaplacian(2.0, dim=2).symbol((1, 2)) == pytest.approx(5.0)
    assert ExponentialShift(1.0, 1.0).symbol(2) == pytest.approx(1 + 2j)
    assert ModulatedDerivative(2).symbol(5) == pytest.approx(3j)
    assert HarmonicPair(2).symbol(3) == -5
    assert Sobolev(2.0, 2.0).symbol(1) == pytest.approx(5.0)
    assert FractionalDerivative(2.0).symbol(3) == pytest.approx(-9)
    sep = Separable((Sobolev(1.0, 2.0), Sobolev(2.0, 2.0)))
    assert sep.symbol((1, 1)) == pytest.approx(2.0 * 5.0)


@pytest.mark.parametrize("op", CATALOG, ids=repr)
def test_symbol_vanishes_on_null_set(op):
    for k in op.null_frequencies:
        assert op.symbol(k) == 0
        assert op.pseudo_symbol(k) == 0


def test_null_frequencies():
    assert DerivativePower(3).null_frequencies == ((0,),)
    assert FractionalLaplacian(1.0, dim=2).null_frequencies == ((0, 0),)
    assert Sobolev(2.0, 2.0).null_frequencies == ()
    assert ExponentialShift(1.0, 2.0).null_frequencies == ()
    assert ExponentialShift(0.0, 2.0).null_frequencies == ((0,),)
    assert ModulatedDerivative(4).null_frequencies == ((4,),)
    assert HarmonicPair(2).null_frequencies == ((-2,), (2,))
    ring = HarmonicPair((1, 0), dim=2).null_frequencies
    assert set(ring) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert RadialGreen(Matern(1.5), 1.0).null_frequencies == ()


def test_pseudo_symbol_examples():
    assert DerivativePower(1).pseudo_symbol(0) == 0
    assert DerivativePower(1).pseudo_symbol(2) == pytest.approx(-0.5j)
    assert Sobolev(2.0, 2.0).pseudo_symbol(0) == pytest.approx(0.25)


def test_fractional_phase_principal_branch():
    op = FractionalDerivative(0.5)
    assert op.symbol(4) == pytest.approx(2 * np.exp(1j * np.pi / 4))
    assert op.symbol(-4) == pytest.approx(2 * np.exp(-1j * np.pi / 4))


@pytest.mark.parametrize("op", [op for op in CATALOG if op.is_real], ids=repr)
def test_real_families_are_hermitian(op):
    L = op.symbol_grid(16)
    assert np.max(np.abs(L - np.conj(np.flip(L)))) <= 1e-12 * np.max(np.abs(L))


def test_modulated_derivative_is_complex():
    assert not ModulatedDerivative(2).is_real
    assert ModulatedDerivative(0).is_real


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(0.1, 3.0))
def test_pseudoinverse_identities_property(alpha, gamma):
    for op in (ExponentialShift(alpha, gamma), Sobolev(alpha, gamma), FractionalDerivative(gamma)):
        assert verify_pseudoinverse(op, 32).ok(1e-12)
        assert projector_defect(op, 32) <= 1e-12


# -- pseudoinverse report ---------------------------------------------------------------


@pytest.mark.parametrize("op", CATALOG, ids=repr)
def test_verify_pseudoinverse_catalog(op):
    K = 64 if op.dim == 1 else 12
    assert verify_pseudoinverse(op, K).ok(1e-12)
    assert projector_defect(op, K) <= 1e-12


def test_verify_pseudoinverse_detects_bad_null_entry():
    op = DerivativePower(2)
    p = op.pseudo_grid(8).copy()
    p[8] = 1.0  # nonzero at the null frequency k = 0
    rep = verify_pseudoinverse(op, 8, pseudo=p)
    assert rep.plp > 0.5
    assert not rep.ok()


def test_fractional_derivative_passes():
    assert verify_pseudoinverse(FractionalDerivative(1.5), 64).ok()


# -- growth -----------------------------------------------------------------------------


def test_spectral_growth_declared():
    assert DerivativePower(3).spectral_growth == 3
    assert ModulatedDerivative(1).spectral_growth == 1
    assert HarmonicPair(1).spectral_growth == 2
    assert RadialGreen(Matern(2.5), 1.0).spectral_growth == 4
    assert Separable((Sobolev(1.0, 2.0), Sobolev(1.0, 2.0))).spectral_growth is None


@pytest.mark.parametrize("op", [op for op in CATALOG if op.spectral_growth is not None and op.dim == 1], ids=repr)
def test_symbol_growth_band(op):
    K = 512
    k = np.arange(8, K + 1)
    L = np.abs(op.symbol_grid(K))[K + 8:]
    ratio = L / k ** op.spectral_growth
    assert ratio.min() > 0
    assert ratio.max() / ratio.min() < 10


# -- Green's functions -------------------------------------------------------------------


def test_green_of_derivative_is_sawtooth():
    g = synthesize(green_table(DerivativePower(1), 2048), smoothing="fejer")
    x = g.axis()
    m = (x > 0.5) & (x < 2 * np.pi - 0.5)
    assert np.max(np.abs(g.values[m] - (np.pi - x[m]))) < 0.02


def test_sobolev_green_coefficients_positive():
    t = green_table(Sobolev(2.0, 2.0), 16)
    k = np.arange(-16, 17)
    assert np.allclose(t.coeffs.real, 1 / (4.0 + k ** 2))
    assert np.all(t.coeffs.real > 0) and np.all(t.coeffs.imag == 0)


def test_exponential_shift_green():
    K = 4096
    t = green_table(ExponentialShift(1.0, 1.0), K)
    g = synthesize(t, smoothing="fejer")
    x = g.axis()
    m = (x > 0.5) & (x < 2 * np.pi - 0.5)
    c = 2 * np.pi * t[0].real / (1 - np.exp(-2 * np.pi))
    rel = np.abs(g.values[m] - c * np.exp(-x[m])) / (c * np.exp(-x[m]))
    assert rel.max() < 0.05


def test_green_table_of_complex_operator_is_not_hermitian():
    assert not green_table(ModulatedDerivative(2), 8).hermitian
    assert green_table(Sobolev(1.0, 2.0), 8).hermitian


# -- construction errors -----------------------------------------------------------------


def test_invalid_constructions():
    with pytest.raises(ValueError):
        Separable((DerivativePower(1), Sobolev(1.0, 2.0)))
    with pytest.raises(ValueError):
        ExponentialShift(-1.0, 1.5)
    with pytest.raises(ValueError):
        Matern(1.0)
    with pytest.raises(ValueError):
        RadialGreen(Matern(2.5), 1.0, kmax=64).symbol(65)
    with pytest.raises(ValueError):
        RadialGreen(Matern(2.5), 1.0, kmax=64).pseudo_grid(100)


# -- radial profiles ----------------------------------------------------------------------


def test_matern_values():
    assert matern_radial(1.5, 1.0) == pytest.approx(np.exp(-1), abs=1e-12)
    assert matern_radial(2.5, 1.0) == pytest.approx(np.exp(-np.sqrt(3)) * (1 + np.sqrt(3)), abs=1e-12)
    for beta in (1.5, 2.2, 3.5, 4.0):
        assert matern_radial(beta, 0.0) == 1.0
    with pytest.raises(ValueError):
        matern_radial(0.9, 1.0)


@pytest.mark.parametrize("beta", [1.5, 2.5, 3.5, 4.5])
def test_bessel_path_agrees_with_closed_form(beta):
    r = np.linspace(0.01, 6.0, 50)
    near = matern_radial(beta + 1e-9, r)  # forces the Bessel branch
    assert np.max(np.abs(near - matern_radial(beta, r))) < 1e-7


def test_compact_polynomial_profile():
    r = np.array([0.0, 0.5, 1.0, 1.5])
    vals = WENDLAND_EXAMPLE(r)
    assert vals[0] == 1.0
    assert vals[1] == pytest.approx(0.5 ** 4 * 3.0)
    assert np.all(vals[2:] == 0)
    with pytest.raises(ValueError):
        CompactPolynomial(())


def test_radial_coefficients_positive_and_decreasing():
    c = radial_green_coeffs(Matern(1.5), 1.0, 256).coeffs.real
    assert np.all(c > 0)
    half = c[256:]
    assert np.all(np.diff(half) < 0)


def test_radial_coefficients_match_dense_quadrature():
    eps, K = 0.8, 6
    t = radial_green_coeffs(Matern(2.5), eps, K)
    x = np.linspace(0, 2 * np.pi, 20001)
    g = matern_radial(2.5, np.sqrt(2 - 2 * np.cos(x)) / eps)
    for k in range(K + 1):
        ref = trapezoid(g * np.cos(k * x), x) / (2 * np.pi)
        assert t[k].real == pytest.approx(ref, abs=1e-8)


def test_non_positive_definite_profile_rejected():
    box = TabulatedRadial([0.0, 0.999, 1.0, 10.0], [1.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        radial_green_coeffs(box, 1.0, 64)


def test_tabulated_profile_reproduces_matern():
    r = np.linspace(0, 20, 20001)
    tab = TabulatedRadial(r, matern_radial(2.5, r))
    a = radial_green_coeffs(tab, 1.0, 16).coeffs
    b = radial_green_coeffs(Matern(2.5), 1.0, 16).coeffs
    assert np.max(np.abs(a - b)) < 1e-6


def test_circle_samples_chord():
    s = circle_samples(lambda r: r, 2.0, 4)
    assert np.allclose(s, [0.0, np.sqrt(2) / 2, 1.0, np.sqrt(2) / 2])


def test_compact_green_support():
    for eps in (0.5, 1.0):
        g = synthesize(green_table(RadialGreen(WENDLAND_EXAMPLE, eps), 512))
        x = g.axis()
        dist = np.minimum(x, 2 * np.pi - x)
        out = dist > 2 * np.arcsin(eps / 2) + 0.05
        assert np.max(np.abs(g.values[out])) <= 1e-2 * np.max(g.values)
