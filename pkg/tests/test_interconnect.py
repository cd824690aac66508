import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from imcsim.interconnect import (
    ScatteringParams,
    WireGeometry,
    build_wire_model,
    fs_factor,
    line_resistance,
    ms_factor,
)

DEFAULT_G = WireGeometry()
DEFAULT_P = ScatteringParams()


def ms_reference(lam, d, r):
    # closed form evaluated at 50 digits, independent of the float path
    mpmath.mp.dps = 50
    a = mpmath.mpf(lam) / d * mpmath.mpf(r) / (1 - mpmath.mpf(r))
    return float(1 / (3 * (mpmath.mpf(1) / 3 - a / 2 + a**2 - a**3 * mpmath.log(1 + 1 / a))))


def test_ms_no_reflection_is_unity():
    assert ms_factor(ScatteringParams(gb_reflection=0.0), 18.0) == 1.0


def test_ms_vanishing_mean_free_path():
    assert ms_factor(ScatteringParams(mean_free_path=1e-9), 18.0) == pytest.approx(1.0, abs=1e-9)


def test_ms_table_values():
    got = ms_factor(ScatteringParams(mean_free_path=40, gb_reflection=0.135), 18.0)
    assert got == pytest.approx(ms_reference(40, 18, 0.135), rel=1e-12)
    assert got == pytest.approx(1.49, abs=0.005)


def test_ms_full_reflection_rejected():
    with pytest.raises(ValueError):
        ms_factor(ScatteringParams(gb_reflection=1.0), 18.0)


def test_fs_examples():
    assert fs_factor(ScatteringParams(specularity=1.0), 12, 33) == 1.0
    assert fs_factor(ScatteringParams(mean_free_path=0.0), 12, 33) == 1.0
    # 1 + 3/8 * 40 * (1/12 + 1/33) = 1 + 675/396
    assert fs_factor(ScatteringParams(specularity=0.0), 12, 33) == pytest.approx(1 + 675 / 396, rel=1e-14)


def test_fs_rejects_bad_dims():
    with pytest.raises(ValueError):
        fs_factor(DEFAULT_P, 0.0, 10.0)


@given(st.floats(0, 0.95), st.floats(0, 0.95))
def test_ms_monotone_in_reflection(r1, r2):
    lo, hi = sorted((r1, r2))
    a = ms_factor(ScatteringParams(gb_reflection=lo), 10.0)
    b = ms_factor(ScatteringParams(gb_reflection=hi), 10.0)
    assert 1.0 <= a <= b * (1 + 1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_fs_monotone_in_diffuseness(p1, p2):
    lo, hi = sorted((p1, p2))
    # lower specularity = more diffuse = larger factor
    assert fs_factor(ScatteringParams(specularity=hi), 10, 20) <= fs_factor(ScatteringParams(specularity=lo), 10, 20)
    assert fs_factor(ScatteringParams(specularity=hi), 10, 20) >= 1.0


def test_bulk_rectangle():
    g = WireGeometry(width=1000, height=1000, taper_angle=90, liner_thickness=0, barrier_thickness=0, pitch=2000)
    p = ScatteringParams(mean_free_path=0.0)
    assert line_resistance(g, p) == pytest.approx(0.0172, rel=1e-12)


def test_default_geometry_near_182():
    r = line_resistance(DEFAULT_G, DEFAULT_P)
    assert 150 <= r <= 215


def test_scaling_exceeds_geometry():
    r7 = line_resistance(DEFAULT_G, DEFAULT_P)
    r14 = line_resistance(DEFAULT_G.scaled(2), DEFAULT_P)
    assert r7 / r14 > 4.0
    no_scatter = ScatteringParams(mean_free_path=0.0)
    geo = line_resistance(DEFAULT_G, no_scatter) / line_resistance(DEFAULT_G.scaled(2), no_scatter)
    assert geo == pytest.approx(4.0, rel=1e-12)


@given(st.floats(1.01, 4.0))
def test_uniform_upscale_decreases_resistance(k):
    assert line_resistance(DEFAULT_G.scaled(k), DEFAULT_P) < line_resistance(DEFAULT_G, DEFAULT_P)


def test_geometry_invariants():
    with pytest.raises(ValueError):
        WireGeometry(width=6.0)
    with pytest.raises(ValueError):
        WireGeometry(taper_angle=0)
    with pytest.raises(ValueError):
        WireGeometry(taper_angle=95)


def test_core_area_must_be_positive():
    # steep taper pinches the core off before the bottom
    with pytest.raises(ValueError):
        line_resistance(WireGeometry(width=18, height=80, taper_angle=84), DEFAULT_P)


def _wire_of(r_per_um):
    # square Cu wire, no shell, no scattering: R = rho / side^2
    side_nm = math.sqrt(0.0172 / r_per_um) * 1000
    g = WireGeometry(width=side_nm, height=side_nm, taper_angle=90, liner_thickness=0,
                     barrier_thickness=0, pitch=2 * side_nm)
    return g, ScatteringParams(mean_free_path=0.0)


def test_segment_from_182():
    g, p = _wire_of(182.0)
    wm = build_wire_model(g, p, sram_cell_height=0.110)
    assert wm.r_per_length == pytest.approx(182.0, rel=1e-12)
    assert wm.r_segment_sram == pytest.approx(20.02, rel=1e-12)
    assert wm.r_segment_fefet == pytest.approx(10.01, rel=1e-12)
    assert wm.r_via == 78.0


def test_zero_cell_height():
    wm = build_wire_model(DEFAULT_G, DEFAULT_P, sram_cell_height=0.0)
    assert wm.r_segment_sram == 0.0 and wm.r_segment_fefet == 0.0


def test_fefet_segment_is_half():
    wm = build_wire_model(DEFAULT_G, DEFAULT_P)
    assert wm.r_segment_fefet == pytest.approx(wm.r_segment_sram / 2, rel=1e-15)
    assert min(wm.r_per_length, wm.r_driver, wm.r_sink, wm.r_via) >= 0


@pytest.mark.parametrize("r", [0.05, 0.3, 0.6, 0.85, 0.95, 0.995])
def test_ms_matches_high_precision_reference(r):
    assert ms_factor(ScatteringParams(gb_reflection=r), 10.0) == pytest.approx(ms_reference(40, 10, r), rel=1e-10)
