import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from lchorizon.errors import ConfigError
from lchorizon.geometry import (C0, EPS0, HBAR, K_B, MU0, CellDesign, UnitScale, VelocityProfile,
                                capacitance_from_profile, effective_metric, find_horizons,
                                hawking_temperature_SI, linear_profile, speed_from_capacitance,
                                speed_from_permittivity, table_profile, tanh_profile, uniform_profile,
                                validate_hierarchy)
from lchorizon.ladder import LadderConfig


def tanh_oracle(c_mid, delta_c, width, v):
    """Closed-form crossing and surface gravity of c_mid + delta_c tanh(chi/width) = |v|."""
    u = (abs(v) - c_mid) / delta_c
    return width * np.arctanh(u), delta_c / width * (1 - u * u)


# ---------------------------------------------------------------- horizons

def test_linear_profile_horizon():
    rep = find_horizons(linear_profile(1.0, 0.1, 1.0, 5.0))
    assert len(rep) == 1
    h = rep.crossings[0]
    assert h.chi == pytest.approx(0.0, abs=1e-9)
    assert h.kappa_g == pytest.approx(0.1, rel=1e-6)
    assert h.temperature == pytest.approx(0.1 / (2 * np.pi), rel=1e-6)


def test_tanh_horizon_at_midpoint():
    h = find_horizons(tanh_profile(1.0, 0.5, 2.0, 1.0)).crossings[0]
    assert h.chi == pytest.approx(0.0, abs=1e-8)
    assert h.kappa_g == pytest.approx(0.25, rel=1e-8)


def test_tanh_horizon_off_midpoint():
    h = find_horizons(tanh_profile(1.0, 0.5, 2.0, 1.25)).crossings[0]
    chi, kappa = tanh_oracle(1.0, 0.5, 2.0, 1.25)
    assert chi == pytest.approx(2 * np.arctanh(0.5))
    assert kappa == pytest.approx(0.1875)
    assert h.chi == pytest.approx(chi, abs=1e-7)
    assert h.kappa_g == pytest.approx(kappa, rel=1e-6)
    # dense-grid scan agrees to its spacing
    grid = np.linspace(-10, 10, 200001)
    prof = tanh_profile(1.0, 0.5, 2.0, 1.25)
    assert h.chi == pytest.approx(grid[np.argmin(np.abs(prof.speed(grid) - 1.25))], abs=1e-4)


@settings(max_examples=60, deadline=None)
@given(u=st.floats(-0.9, 0.9), c_mid=st.floats(0.5, 5), frac=st.floats(0.05, 0.9), width=st.floats(0.1, 10),
       sign=st.sampled_from([-1, 1]))
def test_tanh_surface_gravity_matches_closed_form(u, c_mid, frac, width, sign):
    delta_c = frac * c_mid
    v = sign * (c_mid + u * delta_c)
    rep = find_horizons(tanh_profile(c_mid, delta_c, width, v))
    assert len(rep) == 1
    chi, kappa = tanh_oracle(c_mid, delta_c, width, v)
    h = rep.crossings[0]
    assert h.chi == pytest.approx(chi, abs=max(rep.tol, 1e-9 * width))
    assert h.kappa_g == pytest.approx(kappa, rel=1e-6)
    # an observer drifting toward slower speeds falls through a black horizon
    assert h.kind == ("black" if v < 0 else "white")


def test_metric_time_component_vanishes_at_root():
    prof = tanh_profile(1.0, 0.5, 2.0, 1.25)
    rep = find_horizons(prof)
    h = rep.crossings[0]

    def g_tt(chi):
        return effective_metric(float(prof.speed(chi)), prof.v).g_tt

    assert abs(g_tt(h.chi)) <= 4 * h.kappa_g * rep.tol / abs(prof.v)
    zero = brentq(g_tt, -5, 5, xtol=1e-14)
    assert h.chi == pytest.approx(zero, abs=rep.tol)


def test_root_speed_equals_drift():
    for v in (-1.3, -1.0, 0.7, 1.45):
        prof = tanh_profile(1.0, 0.5, 2.0, v)
        rep = find_horizons(prof)
        for h in rep.crossings:
            assert float(prof.speed(h.chi)) == pytest.approx(abs(v), abs=2 * h.kappa_g * rep.tol)


def test_surface_gravity_converges_with_tolerance():
    # centred difference with step tol: error falls by ~100 per decade of tol
    prof = tanh_profile(1.0, 0.5, 2.0, 1.25)
    _, kappa = tanh_oracle(1.0, 0.5, 2.0, 1.25)
    errs = [abs(find_horizons(prof, tol=tol).crossings[0].kappa_g - kappa) for tol in (1e-1, 1e-2, 1e-3)]
    orders = np.log10(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.9) & (orders < 2.1))


def test_no_horizon_when_subcritical():
    assert len(find_horizons(tanh_profile(1.0, 0.5, 2.0, 0.3))) == 0
    assert len(find_horizons(uniform_profile(2.0, 1.0))) == 0


def test_black_and_white_pair():
    chi = np.linspace(-10, 10, 21)
    c = 1.5 - np.exp(-chi ** 2 / 8)
    rep = find_horizons(table_profile(chi, c, -1.0))
    assert len(rep.black) == 1 and len(rep.white) == 1
    assert rep.black[0].chi > rep.white[0].chi


def test_tangent_horizon_is_degenerate():
    prof = VelocityProfile(lambda chi: (1 + 0.01 * np.asarray(chi) ** 2) ** 2, 1.0, (-5.0, 5.0), (1.0, 1.5625))
    rep = find_horizons(prof)
    assert len(rep) == 1 and rep.crossings[0].degenerate
    assert rep.crossings[0].chi == pytest.approx(0.0, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(steps=st.lists(st.floats(0.05, 1.0), min_size=3, max_size=10), pos=st.floats(0.05, 0.95))
def test_monotone_table_has_single_crossing(steps, pos):
    c = 0.5 + np.concatenate([[0.0], np.cumsum(steps)])
    chi = np.linspace(-5, 5, c.size)
    v = -(c[0] + pos * (c[-1] - c[0]))
    rep = find_horizons(table_profile(chi, c, v))
    assert len(rep) == 1
    h = rep.crossings[0]
    assert h.kind == "black" and not h.degenerate
    assert float(np.sqrt(table_profile(chi, c, v).c2(np.array([h.chi]))[0])) == pytest.approx(-v, rel=1e-8)


def test_profile_validation():
    with pytest.raises(ConfigError):
        tanh_profile(1.0, 1.5, 2.0, 1.0)
    with pytest.raises(ConfigError):
        tanh_profile(1.0, 0.5, 0.0, 1.0)
    with pytest.raises(ConfigError):
        linear_profile(1.0, 1.0, 1.0, 2.0)


# ---------------------------------------------------------------- schedules

def test_capacitance_examples():
    cfg = LadderConfig(16)
    assert np.allclose(capacitance_from_profile(uniform_profile(0.5), cfg).values(0.0), 4.0, rtol=1e-15)
    caps = capacitance_from_profile(uniform_profile(1.0, 0.3), cfg)
    for t in (0.0, 7.5, -3.0):
        assert np.allclose(caps.values(t), 1.0, rtol=1e-15)
    prof = tanh_profile(1.5, 0.5, 2.0, 1.0)
    tanh_caps = capacitance_from_profile(prof, cfg, x_origin=-8.0)
    assert tanh_caps.values(0.0)[8] == pytest.approx(1 / 1.5 ** 2, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(L=st.floats(0.1, 10), dx=st.floats(0.01, 10), t=st.floats(-50, 50), v=st.floats(-3, 3))
def test_speed_capacitance_round_trip(L, dx, t, v):
    prof = tanh_profile(2.0, 1.0, 3.0, v)
    cfg = LadderConfig(40, inductance=L, dx=dx)
    x0 = -20 * dx
    c = speed_from_capacitance(capacitance_from_profile(prof, cfg, x0).values(t), L, dx)
    chi = x0 + dx * np.arange(40) + v * t
    np.testing.assert_allclose(c, prof.speed(chi), rtol=1e-12)


def test_drifting_profile_translates():
    prof = tanh_profile(2.0, 1.0, 3.0, -0.5)
    caps = capacitance_from_profile(prof, LadderConfig(64), x_origin=-32)
    # after one cell of drift the pattern has moved by exactly one cell
    np.testing.assert_allclose(caps.values(2.0)[1:], caps.values(0.0)[:-1], rtol=1e-14)


# ---------------------------------------------------------------- metric

def test_metric_static_flat():
    m = effective_metric(1.0, 0.0)
    np.testing.assert_array_equal(m.g_inv, np.diag([1.0, -1.0, -1.0]))
    np.testing.assert_array_equal(m.g, np.diag([1.0, -1.0, -1.0]))


def test_metric_horizon_condition():
    assert effective_metric(1.0, 1.0).g_tt == 0.0


@settings(max_examples=100, deadline=None)
@given(c=st.floats(0.1, 10), v=st.floats(-10, 10))
def test_metric_properties(c, v):
    m = effective_metric(c, v)
    np.testing.assert_array_equal(m.g_inv, [[1, v, 0], [v, v * v - c * c, 0], [0, 0, -c * c]])
    gi = m.g_inv
    det = (gi[0, 0] * (gi[1, 1] * gi[2, 2] - gi[1, 2] * gi[2, 1]) - gi[0, 1] * (gi[1, 0] * gi[2, 2] - gi[1, 2] * gi[2, 0])
           + gi[0, 2] * (gi[1, 0] * gi[2, 1] - gi[1, 1] * gi[2, 0]))
    assert det == pytest.approx(c ** 4, rel=1e-12, abs=1e-12 * (c * c + v * v) ** 2)
    np.testing.assert_allclose(m.g @ m.g_inv, np.eye(3), atol=1e-12 * max(1.0, v * v / (c * c)))
    assert m.g_tt == pytest.approx((c * c - v * v) / (c * c), abs=1e-15 * (1 + v * v / (c * c)))


# ---------------------------------------------------------------- SI and apparatus

def test_temperature_si():
    assert hawking_temperature_SI(0.0) == 0.0
    assert hawking_temperature_SI(2 * np.pi * K_B / HBAR) == pytest.approx(1.0, rel=1e-14)
    t = hawking_temperature_SI(1.0e10)
    assert t == pytest.approx(1.2e-2, rel=0.02)
    assert 10e-3 <= t <= 100e-3


def test_unit_scale_matches_si_formula():
    scale = UnitScale(time_s=1e-11, length_m=1e-6)
    kappa_sim = 0.25
    assert scale.kelvin(kappa_sim / (2 * np.pi)) == pytest.approx(hawking_temperature_SI(scale.rate_si(kappa_sim)),
                                                                  rel=1e-14)


def design(**over):
    base = dict(dielectric_gap=1e-9, fine_scale=1e-8, cell_length=1e-7, cell_height=1e-7, cell_depth=1e-6,
                wavelength=1e-5)
    base.update(over)
    return CellDesign(**base)


def test_slowdown_from_gap_ratio():
    d = design(dielectric_gap=1e-9, cell_height=1e-7)
    rep = validate_hierarchy(d)
    assert rep.speed == pytest.approx(0.1 * C0, rel=1e-12)
    assert rep.slowdown == pytest.approx(10.0, rel=1e-12)
    assert d.speed == pytest.approx(d.cell_length / np.sqrt(d.inductance * d.capacitance()), rel=1e-14)
    assert speed_from_permittivity(EPS0, d) == pytest.approx(d.speed, rel=1e-15)
    assert d.inductance == pytest.approx(MU0 * 1e-7 * 1e-7 / 1e-6, rel=1e-15)
    assert d.capacitance() == pytest.approx(EPS0 * 1e-7 * 1e-6 / 1e-9, rel=1e-15)


def test_hierarchy_at_threshold_passes():
    rep = validate_hierarchy(design())
    assert rep.passed and not rep.failures
    assert all(c.ratio == pytest.approx(10.0) for c in rep.checks)


def test_hierarchy_single_violation_isolated():
    rep = validate_hierarchy(design(cell_length=2e-7), ratio=10)
    assert not rep.passed
    assert [(f.small, f.large) for f in rep.failures] == [("cell_length", "cell_depth")]
    assert rep.failures[0].ratio == pytest.approx(5.0)


def test_hierarchy_ratio_five_lists_failures():
    rep = validate_hierarchy(design(fine_scale=5e-9, cell_depth=5e-7))
    names = {(f.small, f.large) for f in rep.failures}
    assert ("dielectric_gap", "fine_scale") in names and ("cell_length", "cell_depth") in names


def test_design_rejects_non_positive():
    with pytest.raises(ConfigError, match="cell_depth"):
        design(cell_depth=0.0)
