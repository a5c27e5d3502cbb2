"""Command-line front end: simulate, spectrum, design and switch.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(instability, step-size guard, failed fit), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import Scenario
from .errors import ConfigError, FitError, InstabilityError, StepSizeError
from .geometry import (EPS0, HBAR, MU0, CellDesign, capacitance_from_profile, find_horizons, hawking_temperature_SI,
                       linear_profile, table_profile, tanh_profile, uniform_profile, validate_hierarchy)
from .ladder import (Boundary, CapacitanceSchedule, LadderConfig, default_dt, energy, evolve, init_ladder,
                     leapfrog_eigen_omega, total_charge)
from .spectroscopy import (ScatterRun, WavePacket, flux_mode_sum, hawking_flux, make_packet,
                           scatter_experiment)
from .switching import (PulseSweep, RabiPulse, SwitchParams, ThreeLevelState, adiabatic_psi_c,
                        pulse_to_schedule, three_level_trajectory)

log = logging.getLogger("lchorizon")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class OutputError(Exception):
    pass


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write(path: Path, writer, *args):
    try:
        writer(path, *args)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _write_text(path: Path, text: str):
    _write(path, lambda p, s: Path(p).write_text(s), text)


# ---------------------------------------------------------------- scenario builders

def build_profile(sc: Scenario, section="profile"):
    family = sc.text(section, "family")
    v = sc.quantity(section, "v", "speed")
    if family == "uniform":
        prof = uniform_profile(sc.quantity(section, "c", "speed"), v)
    elif family == "tanh":
        prof = tanh_profile(sc.quantity(section, "c_mid", "speed"), sc.quantity(section, "delta_c", "speed"),
                            sc.quantity(section, "width", "length"), v)
    elif family == "linear":
        prof = linear_profile(sc.quantity(section, "c0", "speed"), sc.quantity(section, "gradient", "rate"), v,
                              sc.quantity(section, "half_width", "length"))
    elif family == "table":
        prof = table_profile(sc.quantities(section, "chi", "length"), sc.quantities(section, "c", "speed"), v)
    else:
        raise sc.error(section, "family", f"unknown profile family {family!r}")
    return prof, sc.quantity(section, "x_origin", "length", 0.0)


def build_ladder(sc: Scenario, c_min: float = None) -> LadderConfig:
    s = "ladder"
    n = sc.integer(s, "n_cells")
    L = sc.quantity(s, "inductance", "inductance")
    dx = sc.quantity(s, "dx", "length")
    if sc.units == "sim" and (L != 1 or dx != 1):
        raise sc.error(s, "inductance" if L != 1 else "dx", "simulation units require inductance = dx = 1")
    kind = sc.text(s, "boundary", "periodic")
    if kind == "periodic":
        boundary = Boundary.periodic()
    elif kind == "absorbing":
        boundary = Boundary.absorbing(sc.integer(s, "sponge_width"), sc.quantity(s, "max_damping", "rate"))
    else:
        raise sc.error(s, "boundary", f"expected 'periodic' or 'absorbing', got {kind!r}")
    factor = sc.number(s, "stability_factor", 0.2)
    dt = sc.quantity(s, "dt", "time", None)
    if dt is None:
        if c_min is None:
            raise sc.error(s, "dt", "required field is missing")
        dt = default_dt(L, c_min, factor)
    cfg = LadderConfig(n, L, dx, dt, boundary, factor)
    try:
        cfg.check()
    except ConfigError as exc:
        raise ConfigError(f"{sc.where(s)}: {exc}") from None
    return cfg


def build_design(sc: Scenario) -> CellDesign:
    s = "design"
    eps = sc.quantity(s, "permittivity", "permittivity", None)
    if eps is None:
        eps = sc.number(s, "relative_permittivity", 1.0) * (EPS0 if sc.units == "si" else 1.0)
    mu = sc.quantity(s, "permeability", "permeability", None)
    if mu is None:
        mu = sc.number(s, "relative_permeability", 1.0) * (MU0 if sc.units == "si" else 1.0)
    try:
        return CellDesign(*(sc.quantity(s, k, "length") for k in
                            ("dielectric_gap", "fine_scale", "cell_length", "cell_height", "cell_depth",
                             "wavelength")), eps, mu)
    except ConfigError as exc:
        raise ConfigError(f"{sc.where(s)}: {exc}") from None


def build_switch(sc: Scenario) -> SwitchParams:
    s = "switch"
    amp = sc.quantity(s, "test_field", "field", 0.0)
    freq = sc.quantity(s, "test_frequency", "rate", 0.0)
    field = (lambda t: amp * np.cos(freq * np.asarray(t))) if amp else (lambda t: np.zeros(np.shape(t)))
    try:
        return SwitchParams(sc.quantity(s, "delta_omega", "rate"), sc.quantity(s, "kappa", "coupling"),
                            test_field=field)
    except ConfigError as exc:
        raise ConfigError(f"{sc.where(s)}: {exc}") from None


def build_pulse(sc: Scenario) -> RabiPulse:
    s = "pulse"
    amp = sc.quantity(s, "amplitude", "rate")
    shape = sc.text(s, "shape", "square")
    duration = sc.quantity(s, "duration", "time", None)
    if duration is not None:
        return RabiPulse(amp, duration, shape)
    if amp <= 0:
        raise sc.error(s, "duration", "a zero-amplitude pulse needs an explicit duration")
    return RabiPulse.with_area(amp, sc.number(s, "area", np.pi), shape)


def build_pulse_schedule(sc: Scenario, config: LadderConfig):
    params = build_switch(sc)
    design = build_design(sc)
    pulse = build_pulse(sc)
    s = "pulse"
    delays = sc.quantities(s, "delays", "time", None)
    if delays is not None:
        if delays.size != config.n_cells:
            raise sc.error(s, "delays", f"need {config.n_cells} delays, got {delays.size}")
        sweep = PulseSweep(pulse, delays)
    else:
        sweep = PulseSweep.moving_front(pulse, config, sc.quantity(s, "speed", "speed"),
                                        sc.quantity(s, "x_start", "length"), sc.quantity(s, "t_start", "time", 0.0))
    density = sc.quantity("switch", "density", "density")
    eps_bg = sc.quantity("switch", "eps_background", "permittivity", None)
    lifetime = sc.quantity("switch", "lifetime", "time", None)
    dt = sc.quantity("switch", "dt", "time", None)
    hbar = 1.0 if sc.units == "sim" else HBAR
    caps = pulse_to_schedule(sweep, params, design, config, density, eps_bg, dt, hbar, lifetime)
    return caps, sweep, params, pulse, hbar


def _schedule(sc: Scenario):
    """Ladder config and capacitance schedule from exactly one of [profile] / [pulse]."""
    has_p, has_u = sc.has("profile"), sc.has("pulse")
    if has_p == has_u:
        raise ConfigError(f"{sc.path}: exactly one of [profile] or [pulse] must be present")
    if has_p:
        prof, x0 = build_profile(sc)
        L = sc.quantity("ladder", "inductance", "inductance")
        dx = sc.quantity("ladder", "dx", "length")
        cfg = build_ladder(sc, c_min=dx * dx / (L * prof.c2_range[1]))
        caps = capacitance_from_profile(prof, cfg, x0)
        return cfg, caps, prof
    L = sc.quantity("ladder", "inductance", "inductance")
    dx = sc.quantity("ladder", "dx", "length")
    n = sc.integer("ladder", "n_cells")
    dt = sc.quantity("ladder", "dt", "time", None)
    seed_cfg = LadderConfig(n, L, dx, dt or 1.0)
    caps = build_pulse_schedule(sc, seed_cfg)[0]
    cfg = build_ladder(sc, c_min=caps.c_min)
    return cfg, caps, None


def build_initial(sc: Scenario, cfg: LadderConfig, caps: CapacitanceSchedule):
    s = "initial"
    kind = sc.text(s, "kind", "zero") if sc.has(s) else "zero"
    n = cfg.n_cells
    x = cfg.dx * np.arange(n)
    if kind == "zero":
        return np.zeros(n), np.zeros(n)
    c0 = caps.values(0.0)
    if kind == "plane_wave":
        if np.ptp(c0) > 1e-12 * c0.max():
            raise sc.error(s, "kind", "plane waves need uniform capacitance at t = 0")
        mode = sc.integer(s, "mode")
        k = 2 * np.pi * mode / (n * cfg.dx)
        amp = sc.quantity(s, "amplitude", "current", 1.0)
        sign = -1.0 if sc.text(s, "branch", "right") == "left" else 1.0
        w = leapfrog_eigen_omega(k, cfg.inductance, c0[0], cfg.dx, cfg.dt)
        return amp * np.cos(k * x), sign * amp * w * cfg.inductance * c0[0] * np.sin(k * x)
    if kind == "packet":
        pk = WavePacket(sc.quantity(s, "k0", "wavenumber"), sc.quantity(s, "sigma_k", "wavenumber"),
                        sc.quantity(s, "x0", "length"), sc.quantity(s, "amplitude", "current", 1.0),
                        sc.text(s, "branch", "right"))
        return make_packet(pk, cfg, c0)
    if kind == "random_smooth":
        rng = np.random.default_rng(sc.seed)
        modes = sc.integer(s, "n_modes", 8)
        amp = sc.quantity(s, "amplitude", "current", 1.0)
        a = np.zeros(n)
        q = np.zeros(n)
        for m in range(1, modes + 1):
            k = 2 * np.pi * m / (n * cfg.dx)
            a += amp * rng.normal() * np.cos(k * x + rng.uniform(0, 2 * np.pi)) / m
            q += amp * rng.normal() * np.sqrt(c0.mean()) * np.cos(k * x + rng.uniform(0, 2 * np.pi)) / m
        return a, q
    raise sc.error(s, "kind", f"unknown initial data {kind!r}")


def _horizon_json(report):
    return [{"chi": h.chi, "kind": h.kind, "kappa_g": h.kappa_g, "temperature": h.temperature,
             "temperature_kelvin": h.temperature_kelvin} for h in report.crossings]


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    sc = Scenario(args.config, args.units, args.seed)
    cfg, caps, prof = _schedule(sc)
    try:
        cfg.check(caps)
    except ConfigError as exc:
        raise ConfigError(f"{sc.where('ladder')}: {exc}") from None
    a0, q0 = build_initial(sc, cfg, caps)
    state = init_ladder(cfg, a0, q0, caps)
    s = "run"
    steps = sc.integer(s, "steps", None)
    if steps is None:
        t_end = sc.quantity(s, "t_end", "time")
        steps = int(round(t_end / cfg.dt))
        if abs(steps * cfg.dt - t_end) > 1e-9 * max(t_end, cfg.dt):
            raise sc.error(s, "t_end", f"t_end is not a whole number of steps of {cfg.dt:g}")
    stride = sc.integer(s, "snapshot_stride", steps)
    if stride <= 0 or steps % stride:
        raise sc.error(s, "snapshot_stride", f"stride {stride} does not divide {steps} steps")
    fmt_kind = sc.text(s, "format", "csv")
    if fmt_kind not in ("csv", "binary"):
        raise sc.error(s, "format", "expected 'csv' or 'binary'")
    out = _outdir(args.out)
    snaps = out / "snapshots"
    _outdir(snaps)
    series = []
    names = []

    def record(st):
        idx = len(series) * stride
        series.append((idx, st.t, energy(st, cfg, caps), float(np.real(total_charge(st)))))
        name = f"snap_{idx:08d}." + ("csv" if fmt_kind == "csv" else "lch")
        writer = io.write_snapshot_csv if fmt_kind == "csv" else io.write_snapshot_binary
        _write(snaps / name, writer, st, cfg)
        names.append(name)

    record(state)
    final = evolve(state, cfg, caps, steps, observer=record, every=stride, progress=True)
    e = np.array([r[2] for r in series])
    qsum = np.array([r[3] for r in series])
    e_drift = float(np.max(np.abs(e - e[0])) / e[0]) if e[0] > 0 else float(np.max(np.abs(e)))
    q_drift = float(np.max(np.abs(qsum - qsum[0])) / max(1.0, float(np.sum(np.abs(state.q)))))
    lines = ["step,t,energy,charge"] + [f"{i},{io.fmt(t)},{io.fmt(en)},{io.fmt(qs)}" for i, t, en, qs in series]
    _write_text(out / "series.csv", "\n".join(lines) + "\n")
    summary = {"command": "simulate", "units": sc.units, "steps": steps, "dt": cfg.dt, "t_final": final.t,
               "energy_initial": float(e[0]), "energy_drift": e_drift, "charge_drift": q_drift,
               "snapshots": names,
               "horizons": _horizon_json(find_horizons(prof)) if prof is not None else []}
    _write_text(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0


def _parse_band(text):
    try:
        lo, hi = (float(s) for s in text.split(":"))
    except ValueError:
        raise ConfigError(f"--fit-band expects LO:HI, got {text!r}") from None
    if not 0 <= lo < hi:
        raise ConfigError(f"--fit-band needs 0 <= LO < HI, got {text!r}")
    return lo, hi


def cmd_spectrum(args) -> int:
    sc = Scenario(args.config, args.units, args.seed)
    prof, _ = build_profile(sc)
    s = "scatter"
    L = sc.quantity(s, "inductance", "inductance", 1.0 if sc.units == "sim" else None)
    if L is None:
        raise sc.error(s, "inductance", "required field is missing")
    dx = sc.quantity(s, "dx", "length")
    if sc.units == "sim" and (L != 1 or dx != 1):
        raise sc.error(s, "dx", "simulation units require inductance = dx = 1")
    band = None
    if args.fit_band:
        band = _parse_band(args.fit_band)
    elif sc.parser.has_option(s, "band_lo"):
        band = (sc.quantity(s, "band_lo", "rate"), sc.quantity(s, "band_hi", "rate"))
    run = ScatterRun(n_cells=sc.integer(s, "n_cells"), dx=dx, inductance=L,
                     duration=sc.quantity(s, "duration", "time"), lead=sc.quantity(s, "lead", "length"),
                     sponge=sc.quantity(s, "sponge", "length"), max_damping=sc.quantity(s, "max_damping", "rate"),
                     taper=sc.quantity(s, "taper", "length"),
                     window_start=sc.quantity(s, "window_start", "length", None),
                     pad=sc.integer(s, "pad", 8), band=band, bin_width=sc.quantity(s, "bin_width", "rate", None))
    report = find_horizons(prof)
    if report.black and report.white:
        sep = sc.number(s, "separation", 0.25)
        length = run.n_cells * run.dx
        gap = min(abs(b.chi - w.chi) for b in report.black for w in report.white)
        if gap < sep * length:
            raise sc.error(s, "separation", f"black/white horizons {gap:g} apart, need {sep:g} of the line")
    p = "packet"
    packet = WavePacket(sc.quantity(p, "k0", "wavenumber"), sc.quantity(p, "sigma_k", "wavenumber"),
                        sc.quantity(p, "distance", "length"), sc.quantity(p, "amplitude", "current", 1.0),
                        sc.text(p, "branch", "right"))
    result = scatter_experiment(prof, packet, run, progress=True)
    result.metadata["band_source"] = "flag" if args.fit_band else ("config" if band else "default")
    result.metadata["units"] = sc.units
    out = _outdir(args.out)
    _write(out / "spectrum.csv", io.write_scatter_csv, result)
    _write(out / "spectrum_plot.dat", io.write_spectrum_plot, result)
    lines = [f"band = [{io.fmt(result.band[0])}, {io.fmt(result.band[1])}]",
             f"bins used = {len(result.samples)}",
             f"max |alpha2 + transmitted - beta2 - 1| = {result.normalization_error:.3e}"]
    summary = {"command": "spectrum", "band": list(result.band), "bins": len(result.samples),
               "normalization_error": result.normalization_error}
    if result.kappa_predicted is None:
        b2max = float(np.max(result.beta2)) if result.samples else 0.0
        verdict = "consistent with zero" if b2max < 1e-8 else "NOT consistent with zero"
        lines.insert(0, f"no horizon; β² {verdict} (max β² = {b2max:.3e})")
        summary.update(horizon=False, max_beta2=b2max)
    else:
        k, T = result.kappa_predicted, result.t_fit
        ratio = T * 2 * np.pi / k
        meta = result.metadata
        oracle = flux_mode_sum(T, meta["c_subcritical"], meta["v_oriented"], run.dx, run.n_cells, run.inductance)
        lines[:0] = [f"kappa_g predicted = {io.fmt(k)}",
                     f"2*pi*T_fit = {io.fmt(2 * np.pi * T)}",
                     f"T_fit*2*pi/kappa_g = {ratio:.6f}",
                     f"T_fit = {io.fmt(T)}  r^2 = {result.fit_r2:.6f}",
                     f"flux pi*T^2/12 = {io.fmt(hawking_flux(T))}  mode sum = {io.fmt(oracle)}"]
        summary.update(horizon=True, kappa_predicted=k, t_fit=T, ratio=ratio, r2=result.fit_r2,
                       flux=hawking_flux(T), flux_mode_sum=oracle)
    _write_text(out / "report.txt", "\n".join(lines) + "\n")
    print("\n".join(lines), file=sys.stderr)
    print(json.dumps(summary))
    return 0


def cmd_design(args) -> int:
    sc = Scenario(args.config, args.units, args.seed)
    if sc.units != "si":
        raise ConfigError(f"{sc.path}: design reports need SI units (units = si)")
    design = build_design(sc)
    ratio = sc.number("design", "ratio", 10.0)
    rep = validate_hierarchy(design, ratio)
    lines = [f"inductance L = {rep.inductance:.6e} H", f"capacitance C = {rep.capacitance:.6e} F",
             f"wave speed c = {rep.speed:.6e} m/s", f"slow-down c0/c = {rep.slowdown:.6g}",
             f"hierarchy (separation ratio {ratio:g}): {'PASS' if rep.passed else 'FAIL'}"]
    for c in rep.checks:
        lines.append(f"  {'PASS' if c.passed else 'FAIL'} {c.small} << {c.large} (ratio {c.ratio:.6g})")
    summary = {"command": "design", "inductance": rep.inductance, "capacitance": rep.capacitance,
               "speed": rep.speed, "slowdown": rep.slowdown, "hierarchy_passed": rep.passed,
               "failures": [f"{c.small}<<{c.large}" for c in rep.failures]}
    if sc.has("sweep"):
        rate = sc.quantity("sweep", "rate", "rate")
        T = hawking_temperature_SI(rate)
        P = hawking_flux(T, "si")
        lines += [f"sweep rate = {rate:.6e} 1/s", f"Hawking temperature = {T:.6e} K ({T * 1e3:.4g} mK)",
                  f"radiated power = {P:.6e} W"]
        summary.update(rate=rate, temperature_K=T, power_W=P)
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(_outdir(args.out) / "design_report.txt", text)
    print(text, end="", file=sys.stderr)
    print(json.dumps(summary))
    return 0


def cmd_switch(args) -> int:
    sc = Scenario(args.config, args.units, args.seed)
    L = sc.quantity("ladder", "inductance", "inductance")
    dx = sc.quantity("ladder", "dx", "length")
    if sc.units == "sim" and (L != 1 or dx != 1):
        raise sc.error("ladder", "dx", "simulation units require inductance = dx = 1")
    cfg = LadderConfig(sc.integer("ladder", "n_cells"), L, dx, 1.0)
    caps, sweep, params, pulse, _ = build_pulse_schedule(sc, cfg)
    # one cell in isolation: norm bookkeeping and the adiabatic comparison
    dt = sc.quantity("switch", "dt", "time", None) or 0.1 / max(params.delta_omega, pulse.amplitude, 1e-300)
    t_end = sc.quantity("switch", "t_end", "time", pulse.duration)
    local = SwitchParams(params.delta_omega, params.kappa, pulse, params.test_field)
    t, psi = three_level_trajectory(ThreeLevelState(1, 0, 0), local, t_end, dt)
    pops = np.abs(psi) ** 2
    norm_drift = float(np.max(np.abs(pops.sum(axis=1) - 1)))
    field = np.asarray(params.test_field(t), dtype=float)
    adiabatic = np.abs(psi[:, 2] - adiabatic_psi_c(psi[:, 1], field, params))
    rel = adiabatic / np.maximum(np.abs(psi[:, 1]), 1e-300)
    i_end = int(np.argmin(np.abs(t - pulse.duration)))
    times = sc.quantities("run", "sample_times", "time", None)
    if times is None:
        t_last = float(np.max(sweep.delays)) + pulse.duration
        t_first = min(0.0, float(np.min(sweep.delays)))
        times = np.linspace(t_first, t_last, 11)
    out = _outdir(args.out)
    _write(out / "schedule.csv", io.write_schedule_csv, caps, times)
    c_all = np.array([caps.values(tt) for tt in times])
    lines = [f"pulse area = {pulse.area:.12g}", f"peak pop_b = {pops[:, 1].max():.12f}",
             f"pop_b at pulse end = {pops[i_end, 1]:.12f}", f"norm drift = {norm_drift:.3e}",
             f"max |psi_c - adiabatic| = {adiabatic.max():.3e}",
             f"max |psi_c - adiabatic| / |psi_b| = {rel[np.abs(psi[:, 1]) > 1e-6].max(initial=0.0):.3e}",
             f"capacitance range = [{c_all.min():.12g}, {c_all.max():.12g}]"]
    full = abs(pulse.area - np.pi) < 1e-9
    if full:
        ok = pops[i_end, 1] >= 1 - 1e-6
        lines.append(f"full transfer at pulse area pi: {'yes' if ok else 'NO'}")
    if np.ptp(c_all) == 0:
        lines.append("schedule is constant")
    _write_text(out / "switch_report.txt", "\n".join(lines) + "\n")
    print("\n".join(lines), file=sys.stderr)
    print(json.dumps({"command": "switch", "pulse_area": pulse.area, "peak_pop_b": float(pops[:, 1].max()),
                      "pop_b_end": float(pops[i_end, 1]), "norm_drift": norm_drift,
                      "adiabatic_error_max": float(adiabatic.max()), "constant_schedule": bool(np.ptp(c_all) == 0),
                      "c_min": float(c_all.min()), "c_max": float(c_all.max())}))
    return 0


COMMANDS = {"simulate": cmd_simulate, "spectrum": cmd_spectrum, "design": cmd_design, "switch": cmd_switch}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lchorizon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file")
        p.add_argument("--out", default="out" if name != "design" else None, help="output directory")
        p.add_argument("--units", choices=("sim", "si"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--fit-band", default=None, help="fit band LO:HI (spectrum)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstabilityError, StepSizeError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OutputError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
