"""Three-level switching model and the pulse-to-capacitance pipeline.

Amplitudes (psi_a, psi_b, psi_c) obey i d(psi)/dt = H(t) psi with

    H = [[0,     -Omega,   0     ],
         [-Omega, 0,      -k E   ],
         [0,     -k E,     dw    ]]

where Omega(t) is the pump Rabi frequency, k E(t) the dipole coupling to the
probe field and dw the detuning of the far level c.  Level b is populated by
the pump; the virtual admixture of c then shifts the permittivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError, StepSizeError
from .geometry import CellDesign
from .ladder import CapacitanceSchedule, LadderConfig

STEP_GUARD = 0.1
CHUNK = 1 << 16
_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class ThreeLevelState:
    psi_a: complex
    psi_b: complex
    psi_c: complex
    t: float = 0.0

    @classmethod
    def from_vector(cls, psi, t=0.0) -> "ThreeLevelState":
        psi = np.asarray(psi, dtype=complex)
        return cls(complex(psi[0]), complex(psi[1]), complex(psi[2]), float(t))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.psi_a, self.psi_b, self.psi_c], dtype=complex)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.vector) ** 2

    @property
    def norm2(self) -> float:
        return float(np.sum(self.populations))


def _constant(value):
    return lambda t: np.full(np.shape(t), float(value))


@dataclass(frozen=True)
class SwitchParams:
    delta_omega: float
    kappa: float
    rabi: Callable = _constant(0.0)
    test_field: Callable = _constant(0.0)

    def __post_init__(self):
        if not (np.isfinite(self.delta_omega) and self.delta_omega > 0):
            raise ConfigError(f"delta_omega must be positive, got {self.delta_omega}")
        if not np.isfinite(self.kappa):
            raise ConfigError("kappa must be finite")


def _sample(fn, t):
    try:
        out = np.asarray(fn(t), dtype=float)
        if out.shape != t.shape:
            out = np.broadcast_to(out, t.shape).astype(float)
    except (TypeError, ValueError):
        out = np.array([float(fn(s)) for s in t])
    if not np.all(np.isfinite(out)):
        bad = t[~np.isfinite(out)][0]
        raise ConfigError(f"drive is not finite at t={bad:g}")
    return out


def _hamiltonians(params: SwitchParams, t):
    om = _sample(params.rabi, t)
    ke = params.kappa * _sample(params.test_field, t)
    H = np.zeros(t.shape + (3, 3))
    H[..., 0, 1] = H[..., 1, 0] = -om
    H[..., 1, 2] = H[..., 2, 1] = -ke
    H[..., 2, 2] = params.delta_omega
    return H


def _magnus4(params, t0, h):
    """Unitary step propagators from the two-node fourth-order Magnus expansion."""
    H1 = _hamiltonians(params, t0 + (0.5 - _SQRT3 / 6) * h)
    H2 = _hamiltonians(params, t0 + (0.5 + _SQRT3 / 6) * h)
    comm = H2 @ H1 - H1 @ H2
    K = (0.5 * h) * (H1 + H2) - 1j * (_SQRT3 / 12 * h * h) * comm
    w, V = np.linalg.eigh(K)
    U = (V * np.exp(-1j * w)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2))
    # one Newton-Schulz polar step removes the O(eps) bias in U^H U that
    # would otherwise accumulate linearly in the norm over long runs
    return U @ (1.5 * np.eye(3) - 0.5 * np.conj(np.swapaxes(U, 1, 2)) @ U)


def _rk4(params, t0, h):
    """Classical Runge-Kutta step written as a matrix acting on psi."""
    A1 = -1j * _hamiltonians(params, t0)
    A2 = -1j * _hamiltonians(params, t0 + 0.5 * h)
    A3 = -1j * _hamiltonians(params, t0 + h)
    eye = np.eye(3)
    M1 = eye + 0.5 * h * A1
    M2 = eye + 0.5 * h * A2 @ M1
    M3 = eye + h * A2 @ M2
    return eye + (h / 6) * (A1 + 2 * A2 @ M1 + 2 * A2 @ M2 + A3 @ M3)


_METHODS = {"magnus4": _magnus4, "rk4": _rk4}


def _propagate(psi0, t0, t_end, dt, params, method, record):
    if t_end < t0:
        raise ConfigError(f"t_end={t_end} precedes the state time {t0}")
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    if method not in _METHODS:
        raise ConfigError(f"unknown integrator {method!r}")
    n = int(np.ceil((t_end - t0) / dt - 1e-9)) if t_end > t0 else 0
    h = (t_end - t0) / n if n else dt
    if h * params.delta_omega > STEP_GUARD * (1 + 1e-12):
        raise StepSizeError(f"dt*delta_omega = {h * params.delta_omega:.3g} exceeds {STEP_GUARD}; "
                            "reduce the step")
    build = _METHODS[method]
    psi = np.array(psi0, dtype=complex)
    out = np.empty((n + 1, 3), dtype=complex) if record else None
    if record:
        out[0] = psi
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        tj = t0 + h * np.arange(start, start + m)
        fast = np.max(np.abs(_hamiltonians(params, tj)[:, :2, :].reshape(m, -1)), initial=0.0)
        if h * fast > STEP_GUARD * (1 + 1e-12):
            raise StepSizeError(f"dt*max(|Omega|, |kappa E|) = {h * fast:.3g} exceeds {STEP_GUARD}")
        U = build(params, tj, h)
        for j in range(m):
            psi = U[j] @ psi
            if record:
                out[start + j + 1] = psi
    if not np.all(np.isfinite(psi)):
        raise StepSizeError("three-level integration produced non-finite amplitudes")
    return psi, h, n, out


def integrate_three_level(state: ThreeLevelState, params: SwitchParams, t_end: float, dt: float,
                          method: str = "magnus4") -> ThreeLevelState:
    """Fixed-step fourth-order integration from state.t to t_end.

    The default Magnus propagator is exactly unitary; ``method="rk4"`` uses the
    classical Runge-Kutta step instead.  The step is shortened slightly so that
    an integer number of steps lands on t_end.
    """
    psi, _, _, _ = _propagate(state.vector, state.t, t_end, dt, params, method, False)
    return ThreeLevelState.from_vector(psi, t_end)


def three_level_trajectory(state: ThreeLevelState, params: SwitchParams, t_end: float, dt: float,
                           method: str = "magnus4"):
    """Return (times, psi) with psi of shape (n_steps + 1, 3)."""
    _, h, n, out = _propagate(state.vector, state.t, t_end, dt, params, method, True)
    return state.t + h * np.arange(n + 1), out


def adiabatic_psi_c(psi_b, field, params: SwitchParams):
    """Far-detuned level amplitude slaved to level b: kappa E psi_b / delta_omega."""
    return params.kappa * np.asarray(field) * np.asarray(psi_b) / params.delta_omega


def effective_permittivity_shift(pop_b, params: SwitchParams, density: float, hbar: float = 1.0):
    """Permittivity increase 2 n |psi_b|^2 kappa^2 hbar / delta_omega.

    The per-dipole energy |psi_b|^2 hbar kappa^2 E^2 / delta_omega is matched
    against (1/2) d_eps E^2 and multiplied by the number density n.  Pass
    hbar = scipy.constants.hbar for SI inputs; simulation units use 1.
    """
    pop = np.asarray(pop_b, dtype=float)
    if np.any(~np.isfinite(pop)) or np.any(pop < -1e-9) or np.any(pop > 1 + 1e-9):
        raise ConfigError("population of level b must lie in [0, 1]")
    if density < 0:
        raise ConfigError(f"dipole density must be >= 0, got {density}")
    pop = np.clip(pop, 0.0, 1.0)
    out = 2.0 * density * pop * params.kappa ** 2 * hbar / params.delta_omega
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- pulses

@dataclass(frozen=True)
class RabiPulse:
    """Pump pulse Omega(tau) starting at tau = 0 (shape 'square' or 'sin2')."""

    amplitude: float
    duration: float
    shape: str = "square"

    def __post_init__(self):
        if self.shape not in ("square", "sin2"):
            raise ConfigError(f"unknown pulse shape {self.shape!r}")
        if not self.duration > 0:
            raise ConfigError("pulse duration must be positive")

    @classmethod
    def with_area(cls, amplitude: float, area: float = np.pi, shape: str = "square") -> "RabiPulse":
        """Pulse whose area 2*int(Omega) equals ``area`` (pi gives full a -> b transfer)."""
        if amplitude <= 0:
            raise ConfigError("amplitude must be positive")
        mean = 1.0 if shape == "square" else 0.5
        return cls(amplitude, area / (2 * amplitude * mean), shape)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        on = (tau >= 0) & (tau < self.duration)
        if self.shape == "square":
            return np.where(on, self.amplitude, 0.0)
        return np.where(on, self.amplitude * np.sin(np.pi * tau / self.duration) ** 2, 0.0)

    @property
    def area(self) -> float:
        mean = 1.0 if self.shape == "square" else 0.5
        return 2 * self.amplitude * self.duration * mean


@dataclass(frozen=True)
class PulseSweep:
    """The same pump pulse applied to every cell with a per-cell start time."""

    pulse: RabiPulse
    delays: np.ndarray
    amplitude_scale: Optional[np.ndarray] = None

    @classmethod
    def moving_front(cls, pulse: RabiPulse, config: LadderConfig, speed: float, x_start: float,
                     t_start: float = 0.0, x_origin: float = 0.0) -> "PulseSweep":
        """Pulses fired by a front at x_start - speed (t - t_start) (moving toward -x for speed > 0)."""
        if speed == 0:
            raise ConfigError("sweep speed must be non-zero")
        x = x_origin + config.dx * np.arange(config.n_cells)
        return cls(pulse, t_start + (x_start - x) / speed)


@dataclass(frozen=True)
class PopulationEnvelope:
    """Prescribed excited population pop_b(chi) in the co-moving coordinate chi = x + v t."""

    pop_b: Callable
    v: float


def _check_design(design: CellDesign, config: LadderConfig):
    if not np.isclose(design.cell_length, config.dx, rtol=1e-9, atol=0):
        raise ConfigError(f"cell pitch {config.dx} differs from design cell_length {design.cell_length}")
    if not np.isclose(design.inductance, config.inductance, rtol=1e-9, atol=0):
        raise ConfigError(f"ladder inductance {config.inductance} differs from design {design.inductance}")


def pulse_to_schedule(pulse: Union[PulseSweep, PopulationEnvelope], params: SwitchParams,
                      design: CellDesign, config: LadderConfig, density: float,
                      eps_background: Optional[float] = None, dt: Optional[float] = None,
                      hbar: float = 1.0, lifetime: Optional[float] = None,
                      x_origin: float = 0.0, method: str = "magnus4") -> CapacitanceSchedule:
    """Capacitances C_n(t) = (eps_background + d_eps_n(t)) * cell_length * cell_depth / dielectric_gap.

    For a PulseSweep the three-level model is integrated once per distinct
    pulse amplitude and the resulting pop_b(tau) curves are frozen into
    read-only tables; cells look them up at tau = t - delay_n.  A
    PopulationEnvelope skips the integration and uses pop_b(x_n + v t).
    """
    _check_design(design, config)
    eps_bg = design.permittivity if eps_background is None else float(eps_background)
    if not eps_bg > 0:
        raise ConfigError("background permittivity must be positive")
    area = design.cell_length * design.cell_depth / design.dielectric_gap
    d_eps_max = effective_permittivity_shift(1.0, params, density, hbar)
    x = x_origin + config.dx * np.arange(config.n_cells)

    def caps_from_pop(pop):
        c = (eps_bg + d_eps_max * pop) * area
        assert np.all(c > 0)
        return c

    decay = (lambda tau: 1.0) if lifetime is None else \
        (lambda tau: np.exp(-np.maximum(tau, 0.0) / lifetime))

    if isinstance(pulse, PopulationEnvelope):
        env, v = pulse.pop_b, pulse.v

        def fn(t):
            pop = np.asarray(env(x + v * t), dtype=float)
            if np.any(pop < -1e-12) or np.any(pop > 1 + 1e-12):
                raise ConfigError("population envelope leaves [0, 1]")
            return caps_from_pop(pop * decay(t))

        return CapacitanceSchedule(fn, config.n_cells, eps_bg * area, (eps_bg + d_eps_max) * area)

    if not isinstance(pulse, PulseSweep):
        raise ConfigError("pulse must be a PulseSweep or a PopulationEnvelope")
    delays = np.asarray(pulse.delays, dtype=float)
    if delays.shape != (config.n_cells,) or not np.all(np.isfinite(delays)):
        raise ConfigError(f"need {config.n_cells} finite per-cell delays")
    scale = np.ones(config.n_cells) if pulse.amplitude_scale is None else \
        np.asarray(pulse.amplitude_scale, dtype=float)
    if scale.shape != (config.n_cells,):
        raise ConfigError("amplitude_scale must have one entry per cell")

    base = pulse.pulse
    fastest = max(params.delta_omega, base.amplitude * float(np.max(np.abs(scale))), 1e-300)
    step = STEP_GUARD / fastest if dt is None else dt
    tables = {}
    for s in np.unique(scale):
        shaped = RabiPulse(base.amplitude * s, base.duration, base.shape)
        local = SwitchParams(params.delta_omega, params.kappa, shaped, params.test_field)
        tau, psi = three_level_trajectory(ThreeLevelState(1, 0, 0), local, base.duration, step, method)
        pop = np.abs(psi[:, 1]) ** 2
        tau.setflags(write=False)
        pop.setflags(write=False)
        tables[float(s)] = (tau, pop)
    groups = [(np.flatnonzero(scale == s), tab) for s, tab in tables.items()]

    def fn(t):
        tau_n = t - delays
        pop = np.empty(config.n_cells)
        for idx, (tau, tab) in groups:
            pop[idx] = np.interp(tau_n[idx], tau, tab, left=0.0, right=tab[-1])
        return caps_from_pop(pop * decay(tau_n))

    sched = CapacitanceSchedule(fn, config.n_cells, eps_bg * area, (eps_bg + d_eps_max) * area)
    sched.population_tables = tables
    return sched
