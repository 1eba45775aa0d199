import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracpme import (
    Field,
    SpectralField,
    forward_transform,
    integrate,
    inverse_transform,
    lp_norm,
    make_torus,
    mean,
    random_field,
)
from fracpme.torus import ManifoldSpec

TWO_PI = 2 * math.pi


# -- construction -----------------------------------------------------------


def test_circle_spectrum_is_k_squared(circle):
    for k in range(-32, 33):
        assert circle.eigenvalue([k]) == pytest.approx(k * k, rel=1e-15, abs=0)


def test_normalized_cube_has_unit_volume():
    spec = make_torus(3, grid=16, volume_normalized=True)
    assert spec.volume == 1.0
    assert spec.flat_volume == pytest.approx(TWO_PI**3)
    # normalization rescales the measure only
    assert spec.eigenvalue([1, 0, 0]) == pytest.approx(1.0)


def test_rectangular_torus_eigenvalues():
    spec = make_torus(2, periods=[1.0, 2.0], grid=[32, 64])
    assert spec.eigenvalue([1, 0]) == pytest.approx(4 * math.pi**2)
    assert spec.eigenvalue([0, 1]) == pytest.approx(math.pi**2)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dim=1, grid=63),
        dict(dim=1, grid=2),
        dict(dim=2, periods=[1.0, -1.0], grid=8),
        dict(dim=4, grid=8),
        dict(dim=0, grid=8),
        dict(dim=1, grid=8, laplacian="chebyshev"),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        make_torus(**kwargs)


def test_eigenvalue_table_nonnegative_zero_only_at_origin(cube):
    lam = cube.eigenvalues
    assert lam.flat[0] == 0.0
    assert np.all(lam.ravel()[1:] > 0)


def test_lattice_symbol_is_finite_difference_laplacian():
    spec = make_torus(1, grid=16, laplacian="lattice")
    h = TWO_PI / 16
    k = np.arange(16)
    expected = (2 / h) ** 2 * np.sin(np.pi * k / 16) ** 2
    np.testing.assert_allclose(spec.eigenvalues, expected, rtol=1e-14, atol=1e-14)


def test_spec_roundtrip_dict(cube):
    assert ManifoldSpec.from_dict(cube.to_dict()) == cube


# -- fields -------------------------------------------------------------------


def test_field_rejects_nonfinite_and_bad_shape(circle):
    with pytest.raises(ValueError):
        Field(circle, np.full(64, np.nan))
    with pytest.raises(ValueError):
        Field(circle, np.zeros(65))


def test_field_is_immutable(circle):
    f = Field.constant(circle, 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


# -- transforms ---------------------------------------------------------------


def test_constant_has_only_zero_mode():
    spec = make_torus(3, grid=16, volume_normalized=True)
    c = forward_transform(Field.constant(spec, 1.0))
    assert c.coefficient([0, 0, 0]) == pytest.approx(1.0)
    rest = np.array(c.coeffs).ravel()[1:]
    assert np.abs(rest).max() < 1e-15


def test_cosine_coefficients(circle):
    f = Field.from_function(circle, np.cos)
    c = forward_transform(f)
    assert c.coefficient([1]) == pytest.approx(0.5, abs=1e-15)
    assert c.coefficient([-1]) == pytest.approx(0.5, abs=1e-15)
    mask = np.ones(64, bool)
    mask[[1, 63]] = False
    assert np.abs(np.array(c.coeffs)[mask]).max() < 1e-15


def test_nyquist_coefficient_real():
    spec = make_torus(2, grid=[8, 6])
    f = random_field(spec, 3, decay=0.0)
    c = forward_transform(f)
    assert c.is_hermitian(tol=0.0)
    assert c.coefficient([4, 0]).imag == 0.0
    assert c.coefficient([0, 3]).imag == 0.0
    assert c.coefficient([4, 3]).imag == 0.0


def test_shape_mismatch_rejected(circle):
    with pytest.raises(ValueError):
        SpectralField(circle, np.zeros(32, complex))


@pytest.mark.parametrize("dim,grid", [(1, 64), (2, 32), (3, 16)])
def test_roundtrip_band_limited(dim, grid):
    spec = make_torus(dim, grid=grid)
    f = random_field(spec, 7, band=grid // 4, offset=0.3)
    g = inverse_transform(forward_transform(f))
    err = np.abs(g.values - f.values).max() / np.abs(f.values).max()
    assert err < 1e-12


def test_parseval_thousand_fields():
    spec = make_torus(2, periods=[1.0, 3.0], grid=[16, 8])
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        f = Field(spec, rng.standard_normal(spec.shape))
        c = np.array(forward_transform(f).coeffs)
        lhs = lp_norm(f, 2) ** 2
        rhs = spec.volume * np.sum(np.abs(c) ** 2)
        worst = max(worst, abs(lhs - rhs) / lhs)
    assert worst < 1e-10


@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([1, 2, 3]), normalized=st.booleans())
def test_roundtrip_and_parseval_property(seed, dim, normalized):
    spec = make_torus(dim, grid={1: 32, 2: 16, 3: 8}[dim], volume_normalized=normalized)
    f = Field(spec, np.random.default_rng(seed).standard_normal(spec.shape))
    c = forward_transform(f)
    g = inverse_transform(c)
    assert np.abs(g.values - f.values).max() <= 1e-12 * np.abs(f.values).max()
    parseval = spec.volume * np.sum(np.abs(np.array(c.coeffs)) ** 2)
    assert parseval == pytest.approx(lp_norm(f, 2) ** 2, rel=1e-10)


# -- integration and norms ------------------------------------------------------


@pytest.mark.parametrize("p", [1, 1.5, 2, 3, np.inf])
def test_constant_norms_on_unit_torus(p):
    spec = make_torus(3, grid=8, volume_normalized=True)
    f = Field.constant(spec, -2.5)
    assert mean(f) == -2.5
    assert lp_norm(f, p) == pytest.approx(2.5, rel=1e-14)


def test_cosine_integrals(circle):
    f = Field.from_function(circle, np.cos)
    assert abs(integrate(f)) < 1e-14
    assert lp_norm(f, 2) ** 2 == pytest.approx(math.pi, rel=1e-14)


def test_abs_cosine_l1_norm():
    # |cos| has kinks, so the periodic trapezoid rule converges only as N^-2:
    # the 1e-10 accuracy is reached at N = 2^20.
    f = Field.from_function(make_torus(1, grid=2**20), np.cos)
    assert lp_norm(f, 1) == pytest.approx(4.0, abs=1e-10)


def test_abs_cosine_l1_second_order_convergence():
    errs = [abs(lp_norm(Field.from_function(make_torus(1, grid=n), np.cos), 1) - 4) for n in (64, 128, 256, 512)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.05)


def test_lp_norm_rejects_p_below_one(circle):
    with pytest.raises(ValueError):
        lp_norm(Field.constant(circle, 1.0), 0.5)


def test_inf_norm_is_max(circle, rng):
    f = Field(circle, rng.standard_normal(64))
    assert lp_norm(f, np.inf) == np.abs(f.values).max()


# -- random fields --------------------------------------------------------------


def test_random_field_band_and_amplitude(cube):
    f = random_field(cube, 1, band=2, amplitude=3.0, offset=1.0)
    assert np.abs(f.values - 1.0).max() == pytest.approx(3.0)
    assert mean(f) == pytest.approx(1.0, abs=1e-14)
    c = np.array(forward_transform(f).coeffs)
    n = np.abs(np.fft.fftfreq(16, 1 / 16)).astype(int)
    outside = (n[:, None, None] > 2) | (n[None, :, None] > 2) | (n[None, None, :] > 2)
    assert np.abs(c[outside]).max() < 1e-15


def test_random_field_reproducible(cube):
    a = random_field(cube, 99)
    b = random_field(cube, 99)
    np.testing.assert_array_equal(a.values, b.values)
