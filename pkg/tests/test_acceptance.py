"""Acceptance suite: one or more ``test_criterion_N_*`` functions per criterion.

The terminal summary (see conftest) prints one pass/fail line per criterion
with its runtime.
"""

import time

import numpy as np
import pytest
from conftest import HEADLINE_KAPPA, HEADLINE_PACKET, HEADLINE_PROFILE
from scipy.optimize import brentq

from lchorizon.geometry import (VelocityProfile, capacitance_from_profile, CellDesign, effective_metric,
                                find_horizons, hawking_temperature_SI, tanh_profile, uniform_profile)
from lchorizon.ladder import (CapacitanceSchedule, LadderConfig, energy, evolve, init_ladder, leapfrog_eigen_omega,
                              shadow_energy, total_charge)
from lchorizon.spectroscopy import (ScatterRun, flux_mode_sum, hawking_flux, measure_frequency,
                                    scatter_experiment)
from lchorizon.switching import (PopulationEnvelope, SwitchParams, ThreeLevelState, adiabatic_psi_c,
                                 integrate_three_level, pulse_to_schedule, three_level_trajectory)


def const(x):
    return lambda t: np.full(np.shape(t), float(x))


def smooth_random(n, seed, modes=6):
    rng = np.random.default_rng(seed)
    x = np.arange(n)
    a = sum(rng.normal() * np.cos(2 * np.pi * m * x / n + rng.uniform(0, 2 * np.pi)) for m in range(1, modes))
    q = sum(rng.normal() * np.sin(2 * np.pi * m * x / n + rng.uniform(0, 2 * np.pi)) for m in range(1, modes))
    return a, q - q.mean()


# ---------------------------------------------------------------- 1

def test_criterion_1_dispersion_oracle():
    t0 = time.perf_counter()
    n, dt = 256, 0.05
    cfg = LadderConfig(n, dt=dt)
    caps = CapacitanceSchedule.uniform(n, 1.0)
    x = np.arange(n)
    worst = 0.0
    for mode in (1, 9, 25, 50, 77, 100, 115, 127):
        k = 2 * np.pi * mode / n
        a = np.exp(1j * k * x)
        q = -1j * leapfrog_eigen_omega(k, 1, 1, 1, dt) * a
        series = []
        evolve(init_ladder(cfg, a, q, caps), cfg, caps, 4000, observer=lambda s: series.append(s.a[0]), every=1)
        w = measure_frequency(np.array(series), dt)
        worst = max(worst, abs(w / (2 * abs(np.sin(k / 2))) - 1))
    elapsed = time.perf_counter() - t0
    print(f"\ncriterion 1: max rel error {worst:.2e} over 8 k values, {elapsed:.2f} s")
    assert worst < 1e-3
    assert elapsed < 10


# ---------------------------------------------------------------- 2

def test_criterion_2_conservation_suite():
    t0 = time.perf_counter()
    n = 64
    cfg = LadderConfig(n, dt=0.2)
    caps = CapacitanceSchedule.uniform(n, 1.0)
    s = init_ladder(cfg, *smooth_random(n, 1), caps)
    h0 = shadow_energy(s, cfg, caps)
    drift = [0.0]

    def watch(st_):
        drift[0] = max(drift[0], abs(shadow_energy(st_, cfg, caps) - h0) / h0)

    evolve(s, cfg, caps, 100_000, observer=watch, every=1000)

    x = np.arange(48)
    wobble = CapacitanceSchedule(lambda t: 1 + 0.2 * np.sin(2 * np.pi * x / 48 + 0.05 * t) * np.cos(0.015 * t),
                                 48, 0.8, 1.2)
    cfg2 = LadderConfig(48, dt=0.15)
    a, q = smooth_random(48, 2)
    s2 = init_ladder(cfg2, a, q + 0.3, wobble)
    out = evolve(s2, cfg2, wobble, 10_000)
    charge = abs(total_charge(out) - total_charge(s2)) / np.abs(s2.q).sum()

    back = evolve(out, cfg2, wobble, 10_000, dt=-cfg2.dt)
    scale = max(np.abs(s2.a).max(), np.abs(s2.q).max())
    rev = max(np.abs(back.a - s2.a).max(), np.abs(back.q - s2.q).max()) / scale
    elapsed = time.perf_counter() - t0
    print(f"\ncriterion 2: energy drift {drift[0]:.2e}, charge drift {charge:.2e}, "
          f"reversibility {rev:.2e}, {elapsed:.2f} s")
    assert drift[0] < 1e-8
    assert charge < 1e-12
    assert rev < 1e-10
    assert elapsed < 30


def test_criterion_2_single_mode_energy():
    # a single standing mode keeps the instantaneous energy itself constant
    n, dt = 64, 0.2
    k = 2 * np.pi * 8 / n
    x = np.arange(n)
    w = leapfrog_eigen_omega(k, 1, 1, 1, dt)
    cfg = LadderConfig(n, dt=dt)
    caps = CapacitanceSchedule.uniform(n, 1.0)
    s = init_ladder(cfg, np.cos(k * x), w * np.sin(k * x), caps)
    e0 = energy(s, cfg, caps)
    out = evolve(s, cfg, caps, 100_000)
    assert abs(energy(out, cfg, caps) - e0) / e0 < 1e-8


# ---------------------------------------------------------------- 3

@pytest.mark.parametrize("c_mid,delta_c,width,v", [(1.0, 0.5, 2.0, -1.0), (1.0, 0.5, 2.0, 1.25),
                                                   (3.0, 1.0, 0.7, -2.4), (10.0, 5.0, 20.0, -10.0)])
def test_criterion_3_horizon_geometry(c_mid, delta_c, width, v):
    prof = tanh_profile(c_mid, delta_c, width, v)
    rep = find_horizons(prof)
    assert len(rep) == 1
    h = rep.crossings[0]
    u = (abs(v) - c_mid) / delta_c
    kappa = delta_c / width * (1 - u * u)
    assert h.kappa_g == pytest.approx(kappa, rel=1e-6)
    # the time-time metric component vanishes at the same place, found independently
    lo, hi = prof.support
    zero = brentq(lambda chi: effective_metric(float(prof.speed(chi)), v).g_tt, lo, hi, xtol=1e-15 * (hi - lo))
    assert h.chi == pytest.approx(zero, abs=rep.tol)
    print(f"\ncriterion 3: kappa rel error {abs(h.kappa_g / kappa - 1):.1e}, root offset {abs(h.chi - zero):.1e}")


# ---------------------------------------------------------------- 4, 6, 7

def test_criterion_4_hawking_thermality(headline):
    r = headline
    m = r.metadata
    assert m["n_cells"] == 4096
    knee = abs(HEADLINE_PROFILE["v"]) / m["dx"]
    assert r.kappa_predicted == pytest.approx(HEADLINE_KAPPA, rel=1e-6)
    assert HEADLINE_KAPPA / knee <= 0.05
    ratio = r.t_fit * 2 * np.pi / r.kappa_predicted
    print(f"\ncriterion 4: T_fit 2 pi / kappa = {ratio:.4f}, r2 = {r.fit_r2:.5f}, bins = {len(r.samples)}")
    assert ratio == pytest.approx(1.0, abs=0.1)
    assert r.fit_r2 > 0.98


def test_criterion_4_runtime():
    from conftest import headline_run
    t0 = time.perf_counter()
    headline_run()
    assert time.perf_counter() - t0 < 300


def test_criterion_6_bogoliubov_normalization(headline):
    dev = np.abs(headline.alpha2 - headline.beta2 - 1)
    print(f"\ncriterion 6: max |alpha2 - beta2 - 1| = {dev.max():.2e} over {dev.size} bins")
    assert dev.size >= 5
    assert np.all(dev < 0.02)


def test_criterion_7_flux_consistency(headline):
    m = headline.metadata
    T = headline.t_fit
    summed = flux_mode_sum(T, m["c_subcritical"], m["v_oriented"], m["dx"], m["n_cells"], m["inductance"])
    closed = hawking_flux(T)
    print(f"\ncriterion 7: mode sum / pi T^2/12 = {summed / closed:.4f}")
    assert summed == pytest.approx(closed, rel=0.2)


def test_criterion_7_si_anchor():
    p = hawking_flux(50e-3, units="si")
    print(f"\ncriterion 7: 50 mK -> {p:.3e} W")
    assert 1e-16 <= p <= 1e-14


# ---------------------------------------------------------------- 5

def test_criterion_5_null_test():
    r = scatter_experiment(uniform_profile(1.5, HEADLINE_PROFILE["v"]), HEADLINE_PACKET,
                           ScatterRun(duration=150.0, band=(0.125, 0.75), bin_width=0.025))
    assert r.kappa_predicted is None
    assert len(r.samples) > 0
    print(f"\ncriterion 5: max beta2 = {np.max(r.beta2):.2e} over {len(r.samples)} bins")
    assert np.all(r.beta2 < 1e-8)


# ---------------------------------------------------------------- 8

def test_criterion_8_rabi_closed_form():
    om = 0.7
    p = SwitchParams(1.0, 0.0, const(om))
    t, psi = three_level_trajectory(ThreeLevelState(1, 0, 0), p, 10.0, 0.01)
    err = max(np.max(np.abs(psi[:, 0] - np.cos(om * t))), np.max(np.abs(psi[:, 1] - 1j * np.sin(om * t))))
    assert err < 1e-8


def test_criterion_8_norm_over_a_million_steps():
    p = SwitchParams(1.0, 0.3, lambda t: 0.05 * np.sin(0.37 * t), lambda t: 0.2 * np.cos(0.011 * t))
    s = integrate_three_level(ThreeLevelState(0.6, 0.8j, 0), p, 1e5, 0.1)
    assert abs(s.norm2 - 1) < 1e-10


def test_criterion_8_adiabatic_exponent():
    def error(ratio, dw=1.0):
        w_e, e0 = ratio * dw, dw / 100
        field = lambda t: e0 * np.sin(w_e * np.asarray(t))
        p = SwitchParams(dw, 1.0, const(0.0), field)
        t, psi = three_level_trajectory(ThreeLevelState(0, 1, 0), p, 2 * np.pi / w_e, 0.05)
        return np.max(np.abs(psi[:, 2] - adiabatic_psi_c(psi[:, 1], field(t), p)) / np.abs(psi[:, 1]))

    ratios = np.geomspace(1e-3, 1e-2, 4)
    slope = np.polyfit(np.log(ratios), np.log([error(r) for r in ratios]), 1)[0]
    print(f"\ncriterion 8: adiabatic error exponent {slope:.3f}")
    assert 0.9 <= slope <= 1.1


def test_criterion_8_si_anchor():
    T = hawking_temperature_SI(1e10)
    print(f"\ncriterion 8: sweep rate 1e10 1/s -> {T * 1e3:.2f} mK")
    assert 10e-3 <= T <= 100e-3


# ---------------------------------------------------------------- 9

def test_criterion_9_cross_module_consistency():
    a, v, density, dw, kappa, eps_bg = 6.0, -0.4, 2.0, 4.0, 1.5, 1.1
    cfg = LadderConfig(128, dt=0.05)
    design = CellDesign(dielectric_gap=1.0, fine_scale=1.0, cell_length=1.0, cell_height=1.0, cell_depth=1.0,
                        wavelength=100.0, permittivity=1.0, permeability=1.0)
    pop = lambda chi: 0.5 * (1 - np.tanh(np.asarray(chi) / a))
    d_eps = 2 * density * kappa ** 2 / dw
    c2 = lambda chi: 1.0 / (eps_bg + d_eps * pop(chi))
    prof = VelocityProfile(c2, v, (-20 * a, 20 * a), (1 / (eps_bg + d_eps), 1 / eps_bg), "custom")
    env = pulse_to_schedule(PopulationEnvelope(pop, v), SwitchParams(dw, kappa), design, cfg, density,
                            eps_background=eps_bg, x_origin=-64.0)
    ref = capacitance_from_profile(prof, cfg, x_origin=-64.0)
    worst = max(np.max(np.abs(env.values(t) / ref.values(t) - 1)) for t in (0.0, 3.3, 41.0, -17.5))
    print(f"\ncriterion 9: max rel difference {worst:.1e}")
    assert worst < 1e-10
