import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite as nph
from scipy.integrate import quad

from wvtilt.errors import GridTooNarrow, NonUniformGrid
from wvtilt.hg_modes import (
    BeamGeometry,
    SampledField,
    decompose_field,
    decompose_function,
    default_grid,
    hermite_poly,
    mode_amplitude,
    sample_mode,
    tilt_coupling_exact,
    tilt_coupling_firstorder,
)


def quad_overlap(f, geometry):
    """Real and imaginary parts of the integral of f over +/- 15 waists (adaptive)."""
    w = geometry.waist
    re = quad(lambda x: np.real(f(x)), -15 * w, 15 * w, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    im = quad(lambda x: np.imag(f(x)), -15 * w, 15 * w, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    return re + 1j * im


def test_hermite_examples():
    assert hermite_poly(0, 3.7) == 1
    assert hermite_poly(1, 2.0) == 4.0
    # 16u^4 - 48u^2 + 12 at u = 1
    assert hermite_poly(4, 1.0) == -20


@pytest.mark.parametrize("n", range(11))
def test_hermite_matches_coefficient_form(n):
    u = np.linspace(-5, 5, 41)
    coef = np.zeros(n + 1)
    coef[n] = 1
    np.testing.assert_allclose(hermite_poly(n, u), nph.hermval(u, coef), rtol=1e-12, atol=1e-9)


def test_hermite_finite_at_documented_range():
    assert np.all(np.isfinite(hermite_poly(30, np.linspace(-20, 20, 101))))


def test_hermite_rejects_negative_order():
    with pytest.raises(ValueError):
        hermite_poly(-1, 0.0)


def test_mode_amplitude_peak(geometry):
    expected = (2 / (math.pi * geometry.waist**2)) ** 0.25
    assert mode_amplitude(0, 0.0, geometry) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(115.317, rel=1e-5)
    assert mode_amplitude(1, 0.0, BeamGeometry(633e-9, 1e-3)) == 0


def test_orthonormality_by_quadrature(geometry):
    for n in range(11):
        for m in range(n, 11):
            val = quad_overlap(lambda x: mode_amplitude(n, x, geometry) * mode_amplitude(m, x, geometry), geometry)
            assert abs(val - (n == m)) < 1e-10, (n, m, val)


def test_recurrence_identity(geometry):
    x = np.linspace(-4, 4, 201) * geometry.waist
    x = x[x != 0]
    lhs = x * mode_amplitude(0, x, geometry)
    rhs = geometry.waist / 2 * mode_amplitude(1, x, geometry)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_decompose_ground_mode(geometry):
    c = decompose_field(sample_mode(0, geometry), 6, geometry)
    assert c[0] == pytest.approx(1, abs=1e-8)
    assert np.all(np.abs(c.coeffs[1:]) < 1e-8)
    assert abs(c.residual) < 1e-8


def test_decompose_tilted_gaussian(geometry):
    k = 0.1 / geometry.waist
    grid = default_grid(geometry)
    field = SampledField(grid, mode_amplitude(0, grid, geometry) * np.exp(1j * k * grid))
    c1 = decompose_field(field, 3, geometry)[1]
    brute = quad_overlap(
        lambda x: mode_amplitude(1, x, geometry) * np.exp(1j * k * x) * mode_amplitude(0, x, geometry), geometry
    )
    assert brute == pytest.approx(0.049938j, abs=1e-6)
    assert c1 == pytest.approx(brute, rel=1e-9)
    assert c1 == pytest.approx(1j * 0.05 * math.exp(-0.00125), rel=1e-10)


def test_decompose_displaced_gaussian(geometry):
    d = 0.01 * geometry.waist
    grid = default_grid(geometry)
    field = SampledField(grid, mode_amplitude(0, grid - d, geometry))
    c = decompose_field(field, 4, geometry)
    assert abs(c[1]) == pytest.approx(0.01, abs=1e-4)


def test_tilt_coupling_examples(geometry):
    w = geometry.waist
    assert tilt_coupling_exact(0.0, geometry) == 0
    assert tilt_coupling_exact(0.1 / w, geometry) == pytest.approx(0.049938j, abs=1e-6)
    exact = tilt_coupling_exact(2 / w, geometry)
    assert exact == pytest.approx(0.60653j, abs=1e-5)
    first = tilt_coupling_firstorder(2 / w, geometry)
    assert abs(first - exact) / abs(exact) == pytest.approx(0.6487, abs=1e-3)


@pytest.mark.parametrize("kw", [1e-4, 1e-2, 0.1, 0.5, 1.0])
def test_decomposition_agrees_with_exact_coupling(geometry, kw):
    k = kw / geometry.waist
    c = decompose_function(lambda x: mode_amplitude(0, x, geometry) * np.exp(1j * k * x), 1, geometry)
    exact = tilt_coupling_exact(k, geometry)
    assert abs(c[1] - exact) / abs(exact) < 1e-6


@pytest.mark.parametrize("kw", [0.05, 0.1, 0.2, 0.3, 0.5])
def test_first_order_error_grows_as_k_squared(geometry, kw):
    k = kw / geometry.waist
    exact = tilt_coupling_exact(k, geometry)
    measured = abs(exact - tilt_coupling_firstorder(k, geometry)) / abs(exact)
    assert measured == pytest.approx(kw**2 / 8, rel=0.1)


@settings(max_examples=40, deadline=None)
@given(kw=st.floats(0.0, 2.0), shift=st.floats(-0.5, 0.5))
def test_captured_power_never_exceeds_one(kw, shift):
    geometry = BeamGeometry(1064e-9, 60e-6)
    grid = default_grid(geometry)
    field = SampledField(
        grid, mode_amplitude(0, grid - shift * geometry.waist, geometry) * np.exp(1j * kw / geometry.waist * grid)
    )
    c = decompose_field(field, 8, geometry)
    assert c.power() <= 1 + 1e-9
    assert c.residual >= -1e-9


def test_grid_too_narrow(geometry):
    grid = np.linspace(-4 * geometry.waist, 4 * geometry.waist, 801)
    with pytest.raises(GridTooNarrow):
        decompose_field(SampledField(grid, mode_amplitude(0, grid, geometry)), 2, geometry)


def test_nonuniform_grid(geometry):
    grid = default_grid(geometry).copy()
    grid[10] += 0.3 * (grid[11] - grid[10])
    with pytest.raises(NonUniformGrid):
        SampledField(grid, np.zeros_like(grid))
    with pytest.raises(NonUniformGrid):
        SampledField(grid[::-1], np.zeros_like(grid))


def test_geometry_validation():
    with pytest.raises(ValueError):
        BeamGeometry(-1, 1e-3)
    with pytest.raises(ValueError):
        BeamGeometry(1e-6, 0)
    assert BeamGeometry(1e-6, 5e-6).nonparaxial
    assert not BeamGeometry(1064e-9, 60e-6).nonparaxial


def test_sampled_field_csv_roundtrip(tmp_path, geometry):
    grid = default_grid(geometry, 101)
    field = SampledField(grid, mode_amplitude(1, grid, geometry) * (1 + 0.5j))
    path = tmp_path / "field.csv"
    field.to_csv(path)
    assert path.read_text().splitlines()[0] == "x_m,re,im"
    back = SampledField.from_csv(path)
    np.testing.assert_array_equal(back.grid, field.grid)
    np.testing.assert_array_equal(back.samples, field.samples)


def test_csv_requires_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0,1,0\n1,1,0\n2,1,0\n")
    with pytest.raises(ValueError):
        SampledField.from_csv(path)
