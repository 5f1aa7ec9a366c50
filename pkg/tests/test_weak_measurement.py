import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from wvtilt.errors import SingularPhase, WeakRegimeWarning
from wvtilt.hg_modes import BeamGeometry, decompose_field, default_grid, mode_amplitude
from wvtilt.weak_measurement import (
    InterferometerSetting,
    SystemState,
    TiltKick,
    WeakInteraction,
    amplified_shift,
    dark_port_field,
    pointer_firstorder,
    postselection_probability,
    preselect,
    weak_value,
)

GEOM = BeamGeometry(1064e-9, 60e-6)


def exact_ratio_by_quad(phi, kw, geometry=GEOM):
    """|c1/c0| of sin(phi/2 + kx) psi_0 by adaptive quadrature, no grid involved."""
    k = kw / geometry.waist
    w = geometry.waist

    def coeff(n):
        f = lambda x: math.sin(phi / 2 + k * x) * mode_amplitude(0, x, geometry) * mode_amplitude(n, x, geometry)
        return quad(f, -15 * w, 15 * w, epsabs=1e-15, epsrel=1e-12, limit=400)[0]

    return abs(coeff(1) / coeff(0))


def test_preselect_at_pi():
    state = preselect(InterferometerSetting(math.pi))
    assert state.amp_plus == pytest.approx(-1j / math.sqrt(2), abs=1e-15)
    assert state.amp_minus == pytest.approx(1j / math.sqrt(2), abs=1e-15)


@given(st.floats(1e-9, math.pi))
def test_preselect_normalized(phi):
    s = preselect(InterferometerSetting(phi))
    assert abs(s.amp_plus) ** 2 + abs(s.amp_minus) ** 2 == pytest.approx(1, abs=1e-12)


def test_setting_validation():
    for bad in (0.0, -0.1, math.pi + 1e-6):
        with pytest.raises(ValueError):
            InterferometerSetting(bad)
    with pytest.raises(ValueError):
        SystemState(1.0, 1.0)


def test_postselection_probability():
    assert postselection_probability(InterferometerSetting(math.pi)) == pytest.approx(1, abs=1e-15)
    p = postselection_probability(InterferometerSetting(0.3636))
    assert p == pytest.approx(math.sin(0.1818) ** 2, rel=1e-12)
    assert p == pytest.approx(0.0327, abs=5e-5)
    assert InterferometerSetting(0.3636).postselection_probability == pytest.approx(p, rel=1e-12)


def test_postselection_inverse_from_powers():
    s = InterferometerSetting.from_powers(55e-6, 70e-6)
    assert s.phi == pytest.approx(2 * math.asin(math.sqrt(55 / 70)), rel=1e-14)
    assert s.phi == pytest.approx(2.179, abs=1e-3)
    assert postselection_probability(s) == pytest.approx(55 / 70, rel=1e-12)


def test_weak_value_examples():
    assert abs(weak_value(InterferometerSetting(math.pi))) < 1e-15
    assert weak_value(InterferometerSetting(math.pi / 2)) == pytest.approx(1j, rel=1e-14)
    a_w = weak_value(InterferometerSetting(0.02))
    assert a_w.imag == pytest.approx(1 / math.tan(0.01), rel=1e-12)
    assert a_w.imag == pytest.approx(99.997, abs=1e-3)


def test_weak_value_singular():
    with pytest.raises(SingularPhase):
        weak_value(InterferometerSetting(1e-10))
    with pytest.raises(SingularPhase):
        weak_value(InterferometerSetting(1e-5), phase_floor=1e-4)


@given(st.floats(1e-6, math.pi))
def test_weak_value_purely_imaginary(phi):
    a_w = weak_value(InterferometerSetting(phi))
    assert abs(a_w.real) <= 1e-14 * max(abs(a_w), 1e-300) or abs(a_w) < 1e-15
    assert a_w.imag == pytest.approx(1 / math.tan(phi / 2), rel=1e-9, abs=1e-15)


def test_kick_consistency():
    kick = TiltKick.from_tilt(2e-9, GEOM)
    assert kick.k == pytest.approx(2 * math.pi * 2e-9 / GEOM.wavelength, rel=1e-15)
    assert TiltKick.from_kick(kick.k, GEOM).theta == pytest.approx(2e-9, rel=1e-14)
    with pytest.raises(ValueError):
        TiltKick(1e-9, 1.0, GEOM.wavelength)
    assert WeakInteraction.from_kick(kick).path_kicks() == (kick.k, -kick.k)


def test_dark_port_without_kick():
    setting = InterferometerSetting(0.7)
    dark = dark_port_field(setting, TiltKick.from_kick(0.0, GEOM), GEOM)
    assert dark.probability == pytest.approx(math.sin(0.35) ** 2, abs=1e-10)
    c = decompose_field(dark.field, 4, GEOM)
    assert abs(c[0]) == pytest.approx(1, abs=1e-10)
    assert np.all(np.abs(c.coeffs[1:]) < 1e-10)


def test_dark_port_ratio_table1_setting():
    phi, kw = 0.3636, 1e-3
    dark = dark_port_field(InterferometerSetting(phi), TiltKick.from_normalized(kw, GEOM), GEOM)
    c = decompose_field(dark.field, 3, GEOM)
    ratio = abs(c[1] / c[0])
    oracle = exact_ratio_by_quad(phi, kw)
    # cot(0.1818) * 5e-4 = 2.7199e-3
    assert oracle == pytest.approx(2.7199e-3, rel=1e-4)
    assert ratio == pytest.approx(oracle, rel=1e-8)
    assert ratio == pytest.approx(kw / 2 / math.tan(phi / 2), rel=1e-3)
    assert dark.weak_regime


def test_strong_regime_is_flagged_and_linear_shift_breaks_down():
    phi, kw = 0.02, 0.1
    setting = InterferometerSetting(phi)
    kick = TiltKick.from_normalized(kw, GEOM)
    dark = dark_port_field(setting, kick, GEOM)
    assert not dark.weak_regime
    k, w = kick.k, GEOM.waist
    num = quad(lambda x: x * math.sin(phi / 2 + k * x) ** 2 * mode_amplitude(0, x, GEOM) ** 2, -15 * w, 15 * w,
               epsabs=0, epsrel=1e-12, limit=400)[0]
    den = quad(lambda x: math.sin(phi / 2 + k * x) ** 2 * mode_amplitude(0, x, GEOM) ** 2, -15 * w, 15 * w,
               epsabs=0, epsrel=1e-12, limit=400)[0]
    centroid = num / den
    predicted = amplified_shift(setting, kick, GEOM).shift
    assert predicted / centroid - 1 > 0.01
    assert predicted / centroid == pytest.approx(26.0, rel=0.05)
    # grid centroid agrees with the quadrature oracle
    grid_centroid = np.sum(dark.field.grid * np.abs(dark.field.samples) ** 2) * dark.field.spacing
    assert grid_centroid == pytest.approx(centroid, rel=1e-9)


@pytest.mark.parametrize("phi", [0.05, 0.3, 1.0, 2.0, math.pi - 0.05])
@pytest.mark.parametrize("scale", [1e-3, 1e-1, 1.0])
def test_exact_matches_first_order_ratio(phi, scale):
    kw = 0.01 * math.tan(phi / 2) * scale
    dark = dark_port_field(InterferometerSetting(phi), TiltKick.from_normalized(kw, GEOM), GEOM)
    c = decompose_field(dark.field, 1, GEOM)
    assert abs(c[1] / c[0]) == pytest.approx(kw / 2 / math.tan(phi / 2), rel=0.01)


@settings(max_examples=25, deadline=None)
@given(phi=st.floats(0.05, 3.0), kw=st.floats(0.0, 0.05))
def test_exact_probability_close_to_sin_squared(phi, kw):
    dark = dark_port_field(InterferometerSetting(phi), TiltKick.from_normalized(kw, GEOM), GEOM)
    # the O(k^2 w0^2) correction: P = (1 - cos(phi) exp(-(k w0)^2 / 2)) / 2
    assert dark.probability == pytest.approx((1 - math.cos(phi) * math.exp(-kw**2 / 2)) / 2, rel=1e-9)
    assert abs(dark.probability - math.sin(phi / 2) ** 2) <= kw**2 + 1e-12


def test_ratio_increases_as_phase_decreases():
    kick = TiltKick.from_normalized(1e-4, GEOM)
    ratios = []
    for phi in np.linspace(3.0, 0.05, 12):
        c = decompose_field(dark_port_field(InterferometerSetting(phi), kick, GEOM).field, 1, GEOM)
        ratios.append(abs(c[1] / c[0]))
    assert np.all(np.diff(ratios) > 0)


def test_pointer_firstorder_examples():
    c = pointer_firstorder(InterferometerSetting(1.0), TiltKick.from_kick(0.0, GEOM), GEOM)
    assert c[0] == pytest.approx(1) and c[1] == 0
    c = pointer_firstorder(InterferometerSetting(math.pi / 2), TiltKick.from_normalized(0.01, GEOM), GEOM)
    assert (c[1] / c[0]) == pytest.approx(0.005, rel=1e-12)
    assert abs(c[1].imag) < 1e-15


@pytest.mark.parametrize("phi,kw", [(0.5, 1e-3), (1.0, 1e-2), (2.5, 1e-2), (math.pi / 2, 1e-4)])
def test_pointer_firstorder_agrees_with_exact(phi, kw):
    setting = InterferometerSetting(phi)
    kick = TiltKick.from_normalized(kw, GEOM)
    approx = pointer_firstorder(setting, kick, GEOM)
    exact = decompose_field(dark_port_field(setting, kick, GEOM).field, 1, GEOM)
    for n in (0, 1):
        if abs(exact[n]) > 0:
            assert abs(approx[n] - exact[n]) / abs(exact[n]) < kw**2


def test_pointer_firstorder_warns_outside_weak_regime():
    with pytest.warns(WeakRegimeWarning):
        pointer_firstorder(InterferometerSetting(0.02), TiltKick.from_normalized(0.1, GEOM), GEOM)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pointer_firstorder(InterferometerSetting(1.0), TiltKick.from_normalized(1e-3, GEOM), GEOM)


def test_amplified_shift():
    kick = TiltKick.from_normalized(1e-3, GEOM)
    assert amplified_shift(InterferometerSetting(math.pi), kick, GEOM).amplification < 1e-15
    a = amplified_shift(InterferometerSetting(0.02), kick, GEOM)
    assert a.amplification == pytest.approx(100, rel=1e-4)
    assert a.shift == pytest.approx(a.amplification * kick.k * GEOM.waist**2 / 2, rel=1e-14)
    big = amplified_shift(InterferometerSetting(0.001), kick, GEOM).amplification
    small = amplified_shift(InterferometerSetting(0.002), kick, GEOM).amplification
    assert big / small == pytest.approx(2, rel=1e-3)


def test_dark_port_grid_checks():
    from wvtilt.errors import GridTooNarrow

    grid = default_grid(GEOM, 401, span=3)
    with pytest.raises(GridTooNarrow):
        dark_port_field(InterferometerSetting(1.0), TiltKick.from_kick(0.0, GEOM), GEOM, grid)
