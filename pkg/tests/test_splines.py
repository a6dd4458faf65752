import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_splines.errors import InvalidSpline, ValidationError
from torus_splines.fourier import SymbolTable, synthesize
from torus_splines.operators import DerivativePower, FractionalLaplacian, HarmonicPair, Sobolev, green_table
from torus_splines.splines import (
    Innovations,
    Spline,
    annihilation_check,
    apply_operator,
    innovation_matrix,
    spline_table,
    synthesize_spline,
    torus_distance,
    validate_innovations,
)

D2 = DerivativePower(2)


def _two_knot():
    return Spline(D2, Innovations([[0.0], [np.pi]], [1.0, -1.0]))


# -- innovations ---------------------------------------------------------------------


def test_innovations_normalize_and_validate():
    inn = Innovations([[7.0], [-1.0]], [1.0, 2.0])
    assert np.allclose(inn.knots[:, 0], [7.0 - 2 * np.pi, 2 * np.pi - 1.0])
    assert inn.tv_norm == 3.0
    with pytest.raises(ValidationError):
        Innovations([[0.0], [2 * np.pi]], [1.0, 1.0])  # duplicate on the torus
    with pytest.raises(ValidationError):
        Innovations([[0.0], [1.0]], [1.0, 0.0])
    with pytest.raises(ValidationError):
        Innovations([[0.0]], [1.0, 2.0])
    assert len(Innovations.empty(2)) == 0


def test_torus_distance_wraps():
    assert torus_distance([0.1], [2 * np.pi - 0.1]) == pytest.approx(0.2)
    assert torus_distance([0.0, 0.0], [np.pi, np.pi]) == pytest.approx(np.pi * np.sqrt(2))


# -- innovation matrix -----------------------------------------------------------------


def test_innovation_matrix_examples():
    x = np.array([[0.3], [1.2], [4.0]])
    assert np.allclose(innovation_matrix(x, [(0,)]), [[1, 1, 1]])
    assert innovation_matrix(x, []).shape == (0, 3)
    assert np.allclose(innovation_matrix([[0.0], [np.pi]], [(1,)]), [[1, -1]])


def test_validate_examples():
    assert not validate_innovations(D2, Innovations([[1.0]], [1.0])).valid
    assert validate_innovations(D2, Innovations([[0.0], [np.pi]], [1.0, -1.0])).valid
    assert validate_innovations(Sobolev(2.0, 2.0), Innovations([[0.4], [3.0]], [1.0, 7.0])).valid
    with pytest.raises(ValidationError):
        validate_innovations(D2, Innovations([[0.0, 0.0]], [1.0]))


def test_validation_is_scale_invariant():
    inn = Innovations([[0.0], [2.0], [4.0]], [1.0, -0.25, -0.75])
    for s in (1e-8, 1.0, 1e8):
        assert validate_innovations(D2, Innovations(inn.knots, s * inn.weights)).valid


def test_invalid_spline_rejected():
    with pytest.raises(InvalidSpline):
        Spline(D2, Innovations([[1.0]], [1.0]))
    bad = Spline(D2, Innovations([[0.0], [np.pi]], [1.0, -0.9]), check=False)
    with pytest.raises(InvalidSpline):
        spline_table(bad, 16)


# -- spline tables -----------------------------------------------------------------------


def test_pure_null_space_spline_is_constant():
    s = Spline(D2, Innovations.empty(1), {(0,): 2.0})
    t = spline_table(s, 8)
    assert t[0] == 2.0 and np.count_nonzero(t.coeffs) == 1
    assert np.allclose(synthesize(t, 32).values, 2.0)


def test_d2_spline_is_piecewise_linear():
    # f'' = comb - comb(. - pi) with zero mean: the triangle wave pi * min(x, 2 pi - x) - pi^2 / 2
    g = synthesize_spline(_two_knot(), 512, 2048)
    x = g.axis()
    exact = np.pi * np.minimum(x, 2 * np.pi - x) - np.pi ** 2 / 2
    assert np.max(np.abs(g.values - exact)) < 1e-2


def test_single_knot_sobolev_equals_green():
    op = Sobolev(2.0, 2.0)
    s = Spline(op, Innovations([[0.0]], [1.0]))
    assert np.max(np.abs(spline_table(s, 32).coeffs - green_table(op, 32).coeffs)) == 0


def test_null_coefficients_are_paired():
    op = HarmonicPair(1)
    s = Spline(op, Innovations.empty(1), {(1,): 0.5 - 0.25j})
    assert s.null_coeffs[(-1,)] == 0.5 + 0.25j
    with pytest.raises(ValidationError):
        Spline(op, Innovations.empty(1), {(2,): 1.0})
    with pytest.raises(ValidationError):
        Spline(D2, Innovations.empty(1), {(0,): 1j})


def test_spline_table_2d():
    op = FractionalLaplacian(3.0, dim=2)
    s = Spline(op, Innovations([[0.0, 0.0], [np.pi, 1.0]], [1.0, -1.0]))
    t = spline_table(s, 8)
    assert t.hermitian and t.dim == 2


# -- operator application --------------------------------------------------------------------


def test_operator_on_green_is_comb_minus_projection():
    for op in (D2, HarmonicPair(2), Sobolev(1.0, 2.0)):
        out = apply_operator(op, green_table(op, 16)).coeffs
        ref = np.ones(33)
        for (k,) in op.null_frequencies:
            ref[k + 16] = 0
        assert np.max(np.abs(out - ref)) <= 1e-12


def test_apply_operator_examples():
    assert np.all(apply_operator(D2, SymbolTable.zeros(1, 4)).coeffs == 0)
    sin = SymbolTable.from_modes(1, 4, {1: -0.5j, -1: 0.5j})
    cos = apply_operator(DerivativePower(1), sin)
    assert cos[1] == pytest.approx(0.5) and cos[-1] == pytest.approx(0.5)


# -- annihilation ------------------------------------------------------------------------------


def test_annihilation_examples():
    assert annihilation_check(D2, _two_knot(), 256) <= 1e-10
    op = Sobolev(2.0, 2.0)
    assert annihilation_check(op, Spline(op, Innovations([[1.0]], [1.0])), 64) <= 1e-12
    bad = Spline(D2, Innovations([[0.0], [np.pi]], [1.0, -0.9]), check=False)
    assert not bad.valid
    assert annihilation_check(D2, bad, 32) == pytest.approx(0.1, abs=1e-14)


def test_null_component_leaves_annihilation_unchanged():
    a = annihilation_check(D2, _two_knot(), 64)
    s = Spline(D2, _two_knot().innov, {(0,): 3.0})
    assert annihilation_check(D2, s, 64) == pytest.approx(a, abs=1e-15)


def test_annihilation_of_valid_splines_vanishes_on_null_set():
    op = HarmonicPair(1)
    x = np.array([[0.0], [2 * np.pi / 3], [4 * np.pi / 3]])
    s = Spline(op, Innovations(x, [1.0, 1.0, 1.0]))
    M = innovation_matrix(s.innov.knots, op.null_frequencies)
    assert np.max(np.abs(M @ s.innov.weights)) < 1e-12
    assert annihilation_check(op, s, 64) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 63), st.integers(0, 2**31 - 1))
def test_shift_covariance(shift, seed):
    rng = np.random.default_rng(seed)
    n, K = 64, 20
    x = 2 * np.pi * rng.choice(n, 3, replace=False) / n
    w = rng.standard_normal(3)
    w[-1] = -w[:-1].sum()  # D^2 needs sum(a) = 0
    s0 = Spline(D2, Innovations(x[:, None], w))
    s1 = Spline(D2, s0.innov.shifted([2 * np.pi * shift / n]))
    g0 = synthesize_spline(s0, K, n).values
    g1 = synthesize_spline(s1, K, n).values
    assert np.max(np.abs(g1 - np.roll(g0, shift))) <= 1e-10 * max(1.0, np.max(np.abs(g0)))
