"""Discrete LC ladder: state, capacitance schedules and the symplectic stepper.

Each cell n carries an effective potential A_n (time integral of the node
voltage divided by L) and a capacitor charge Q_n.  The equations of motion are

    dQ_n/dt = A_{n+1} - 2 A_n + A_{n-1}
    dA_n/dt = Q_n / (L C_n(t))

so the current through link n is I_n = A_{n+1} - A_n and the voltage across
capacitor n is U_n = Q_n / C_n.  The update is kick-drift-kick leapfrog with
C_n sampled at the midpoint of the step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, InstabilityError, StepSizeError

log = logging.getLogger(__name__)

# hard limit: dt * omega_max = 2 at the band edge
HARD_STABILITY = 1.0
DEFAULT_STABILITY = 0.2
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class Boundary:
    """End conditions of the line.

    ``periodic`` wraps the last cell onto the first.  ``absorbing`` uses free
    (Neumann) ends plus a damping sponge of ``sponge_width`` cells whose rate
    ramps quadratically up to ``max_damping`` (1/s) at the outermost cell.
    """

    kind: str = "periodic"
    sponge_width: int = 0
    max_damping: float = 0.0

    @classmethod
    def periodic(cls) -> "Boundary":
        return cls("periodic")

    @classmethod
    def absorbing(cls, sponge_width: int, max_damping: float) -> "Boundary":
        return cls("absorbing", int(sponge_width), float(max_damping))

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"

    def damping_profile(self, n_cells: int) -> np.ndarray:
        """Damping rate per cell (zero outside the sponge)."""
        gamma = np.zeros(n_cells)
        if self.is_periodic or self.sponge_width == 0:
            return gamma
        w = self.sponge_width
        depth = (w - np.arange(w)) / w
        gamma[:w] = self.max_damping * depth ** 2
        gamma[n_cells - w:] = np.maximum(gamma[n_cells - w:], self.max_damping * depth[::-1] ** 2)
        return gamma


@dataclass(frozen=True)
class LadderConfig:
    n_cells: int
    inductance: float = 1.0
    dx: float = 1.0
    dt: float = 0.2
    boundary: Boundary = field(default_factory=Boundary)
    stability_factor: float = DEFAULT_STABILITY

    def check(self, caps: Optional["CapacitanceSchedule"] = None) -> None:
        """Raise ConfigError naming the first violated invariant."""
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise ConfigError(f"n_cells must be an integer >= 3, got {self.n_cells}")
        for name in ("inductance", "dx", "dt"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ConfigError(f"{name} must be positive and finite, got {val}")
        if not 0 < self.stability_factor <= HARD_STABILITY:
            raise ConfigError(f"stability_factor must lie in (0, 1], got {self.stability_factor}")
        b = self.boundary
        if b.kind not in ("periodic", "absorbing"):
            raise ConfigError(f"unknown boundary kind {b.kind!r}")
        if b.kind == "absorbing":
            if b.sponge_width < 0 or 2 * b.sponge_width >= self.n_cells:
                raise ConfigError(f"sponge_width {b.sponge_width} does not fit in {self.n_cells} cells")
            if b.max_damping < 0:
                raise ConfigError(f"max_damping must be >= 0, got {b.max_damping}")
        if caps is not None:
            if caps.n_cells != self.n_cells:
                raise ConfigError(f"schedule has {caps.n_cells} cells, config has {self.n_cells}")
            limit = self.stability_factor * np.sqrt(self.inductance * caps.c_min)
            if self.dt > limit * (1 + _BOUND_SLACK):
                raise ConfigError(
                    f"dt={self.dt:g} exceeds {self.stability_factor:g}*sqrt(L*C_min)={limit:g}")


def default_dt(inductance: float, c_min: float, factor: float = DEFAULT_STABILITY) -> float:
    return factor * float(np.sqrt(inductance * c_min))


class CapacitanceSchedule:
    """Time-dependent capacitances C_n(t) with declared bounds.

    ``fn(t)`` must return the array of all n_cells capacitances at time t and be
    a pure function of t.  Returned arrays are checked against [c_min, c_max].
    """

    def __init__(self, fn: Callable[[float], np.ndarray], n_cells: int, c_min: float, c_max: float,
                 static: bool = False):
        if not (np.isfinite(c_min) and c_min > 0):
            raise ConfigError(f"C_min must be positive, got {c_min}")
        if not c_max >= c_min:
            raise ConfigError(f"C_max={c_max} below C_min={c_min}")
        self._fn = fn
        self.n_cells = int(n_cells)
        self.c_min = float(c_min)
        self.c_max = float(c_max)
        self.static = static
        self._cache = None

    @classmethod
    def uniform(cls, n_cells: int, c: float) -> "CapacitanceSchedule":
        return cls.from_array(np.full(n_cells, float(c)))

    @classmethod
    def from_array(cls, caps) -> "CapacitanceSchedule":
        caps = np.array(caps, dtype=float)
        caps.setflags(write=False)
        return cls(lambda t: caps, caps.size, caps.min(), caps.max(), static=True)

    def values(self, t: float) -> np.ndarray:
        if self.static and self._cache is not None:
            return self._cache
        c = np.asarray(self._fn(t), dtype=float)
        if c.shape != (self.n_cells,):
            raise ConfigError(f"schedule returned shape {c.shape}, expected ({self.n_cells},)")
        lo, hi = c.min(), c.max()
        if not (lo >= self.c_min * (1 - _BOUND_SLACK) and hi <= self.c_max * (1 + _BOUND_SLACK)):
            raise ConfigError(f"C(t={t:g}) in [{lo:g}, {hi:g}] leaves declared bounds "
                              f"[{self.c_min:g}, {self.c_max:g}]")
        if self.static:
            self._cache = c
        return c

    def __call__(self, n: int, t: float) -> float:
        return float(self.values(t)[n])


@dataclass(frozen=True)
class LadderState:
    a: np.ndarray
    q: np.ndarray
    t: float = 0.0

    def copy(self) -> "LadderState":
        return LadderState(self.a.copy(), self.q.copy(), self.t)

    @property
    def n_cells(self) -> int:
        return self.a.size


def init_ladder(config: LadderConfig, initial_a, initial_q, caps: Optional[CapacitanceSchedule] = None,
                t0: float = 0.0) -> LadderState:
    """Validate the configuration and return a state holding copies of the inputs."""
    config.check(caps)
    a = np.array(initial_a)
    q = np.array(initial_q)
    for name, arr in (("initial_a", a), ("initial_q", q)):
        if arr.ndim != 1 or arr.size != config.n_cells:
            raise ConfigError(f"{name} has shape {arr.shape}, expected ({config.n_cells},)")
        if not np.all(np.isfinite(arr)):
            raise ConfigError(f"{name} has non-finite entries")
    dtype = np.result_type(a, q, float)
    return LadderState(a.astype(dtype), q.astype(dtype), float(t0))


def links(a: np.ndarray, periodic: bool) -> np.ndarray:
    """Link currents I_n = A_{n+1} - A_n."""
    if periodic:
        return np.roll(a, -1) - a
    return np.diff(a)


def _laplacian(a, periodic, out):
    if periodic:
        np.subtract(np.roll(a, 1) + np.roll(a, -1), 2 * a, out=out)
    else:
        out[1:-1] = a[2:] - 2 * a[1:-1] + a[:-2]
        out[0] = a[1] - a[0]
        out[-1] = a[-2] - a[-1]
    return out


class _Stepper:
    """In-place kick-drift-kick kernel shared by step() and evolve()."""

    def __init__(self, config: LadderConfig, caps: CapacitanceSchedule, dt: float):
        if caps.n_cells != config.n_cells:
            raise ConfigError(f"schedule has {caps.n_cells} cells, config has {config.n_cells}")
        limit = HARD_STABILITY * np.sqrt(config.inductance * caps.c_min)
        if abs(dt) > limit * (1 + _BOUND_SLACK):
            raise StepSizeError(f"|dt|={abs(dt):g} exceeds stability limit sqrt(L*C_min)={limit:g}")
        self.L = config.inductance
        self.caps = caps
        self.dt = dt
        self.periodic = config.boundary.is_periodic
        gamma = config.boundary.damping_profile(config.n_cells)
        w = 0 if self.periodic else config.boundary.sponge_width
        self.w = w
        if w > 0:
            self.fac_lo = np.exp(-gamma[:w + 1] * abs(dt))
            self.fac_hi = np.exp(-gamma[-(w + 1):] * abs(dt))

    def _sponge(self, arr, sl, fac, damp_mean):
        seg = arr[sl]
        if damp_mean:
            # relax toward the local three-point mean so constant a is untouched
            mean = seg.copy()
            mean[1:-1] = (seg[:-2] + seg[1:-1] + seg[2:]) / 3
            mean[0] = (seg[0] + seg[1]) / 2
            mean[-1] = (seg[-2] + seg[-1]) / 2
            arr[sl] = mean + (seg - mean) * fac
        else:
            arr[sl] = seg * fac

    def advance(self, a, q, t, n_steps, lap, observer=None, every=0, progress=False):
        h = self.dt
        half = 0.5 * h
        L = self.L
        n = a.size
        w = self.w
        for j in range(n_steps):
            tm = t + (j + 0.5) * h
            q += half * _laplacian(a, self.periodic, lap)
            a += h * q / (L * self.caps.values(tm))
            q += half * _laplacian(a, self.periodic, lap)
            if w > 0:
                lo, hi = slice(0, w + 1), slice(n - w - 1, n)
                self._sponge(a, lo, self.fac_lo, True)
                self._sponge(q, lo, self.fac_lo, False)
                self._sponge(a, hi, self.fac_hi, True)
                self._sponge(q, hi, self.fac_hi, False)
            done = j + 1
            if done % 256 == 0 or done == n_steps:
                if not (np.all(np.isfinite(a)) and np.all(np.isfinite(q))):
                    mx = float(np.nanmax(np.abs(np.where(np.isfinite(a), a, np.inf))))
                    raise InstabilityError(
                        f"non-finite state after step {done} (max |A| = {mx:g})", step=done, max_abs=mx)
            if progress and done % 1000 == 0:
                log.info("step %d/%d t=%.6g", done, n_steps, t + done * h)
            if observer is not None and every and done % every == 0:
                observer(LadderState(a.copy(), q.copy(), t + done * h))
        return t + n_steps * h


def step(state: LadderState, config: LadderConfig, caps: CapacitanceSchedule,
         dt: Optional[float] = None) -> LadderState:
    """Advance one step of length dt (config.dt by default; negative runs backward)."""
    return evolve(state, config, caps, 1, dt=dt)


def evolve(state: LadderState, config: LadderConfig, caps: CapacitanceSchedule, n_steps: int,
           dt: Optional[float] = None, observer: Optional[Callable[[LadderState], None]] = None,
           every: int = 0, progress: bool = False) -> LadderState:
    """Advance ``n_steps`` steps; ``observer`` receives a state copy every ``every`` steps."""
    h = config.dt if dt is None else float(dt)
    stepper = _Stepper(config, caps, h)
    a = state.a.copy()
    q = state.q.copy()
    lap = np.empty_like(a)
    t = stepper.advance(a, q, state.t, int(n_steps), lap, observer, every, progress)
    return LadderState(a, q, t)


def energy(state: LadderState, config: LadderConfig, caps: CapacitanceSchedule) -> float:
    """Sum of capacitor energies |Q|^2/(2C) and inductor energies L|I|^2/2."""
    c = caps.values(state.t)
    cur = links(state.a, config.boundary.is_periodic)
    return float(np.sum(np.abs(state.q) ** 2 / (2 * c)) + 0.5 * config.inductance * np.sum(np.abs(cur) ** 2))


def shadow_energy(state: LadderState, config: LadderConfig, caps: CapacitanceSchedule,
                  dt: Optional[float] = None) -> float:
    """Quadratic invariant of the kick-drift-kick map for constant C.

    energy() minus dt^2/8 * sum |lap A|^2 / C.  It is conserved to round-off,
    whereas energy() itself oscillates at relative order (omega dt)^2 unless
    the data is a single travelling eigenmode.
    """
    h = config.dt if dt is None else float(dt)
    c = caps.values(state.t)
    lap = _laplacian(state.a, config.boundary.is_periodic, np.empty_like(state.a))
    return energy(state, config, caps) - h * h / 8 * float(np.sum(np.abs(lap) ** 2 / c))


def total_charge(state: LadderState):
    return state.q.sum()


def kg_norm(state: LadderState, config: LadderConfig) -> float:
    """Conserved indefinite inner product of the complex field, -L * sum Im(conj(A) Q).

    Positive for positive-frequency solutions; exactly invariant under the
    linear symplectic step even when C depends on time.
    """
    return float(-config.inductance * np.sum(np.imag(np.conj(state.a) * state.q)))


def _check_params(L, C, dx):
    if np.any(np.asarray(L) <= 0) or np.any(np.asarray(C) <= 0) or np.any(np.asarray(dx) <= 0):
        raise ConfigError("L, C and dx must be positive")


def dispersion_omega(k, L, C, dx):
    """Lattice angular frequency 2/sqrt(LC) |sin(k dx/2)|."""
    _check_params(L, C, dx)
    return 2 / np.sqrt(L * C) * np.abs(np.sin(np.asarray(k) * dx / 2))


def _fold(k, dx):
    # reduce to the branch 0 <= k <= pi/dx
    kb = np.pi / dx
    return np.abs((np.asarray(k, dtype=float) + kb) % (2 * kb) - kb)


def group_velocity(k, L, C, dx):
    """|d omega/dk| = c cos(k dx/2) on the branch k in [0, pi/dx], c = dx/sqrt(LC)."""
    _check_params(L, C, dx)
    return dx / np.sqrt(L * C) * np.cos(_fold(k, dx) * dx / 2)


def leapfrog_omega(k, L, C, dx, dt):
    """Frequency of a lattice mode as propagated by the leapfrog step."""
    w = dispersion_omega(k, L, C, dx)
    return 2 / abs(dt) * np.arcsin(np.minimum(1.0, w * abs(dt) / 2))


def leapfrog_eigen_omega(k, L, C, dx, dt):
    """Ratio Q/(-i L C A) of a positive-frequency leapfrog eigenmode at full steps."""
    w = dispersion_omega(k, L, C, dx)
    return w * np.sqrt(np.maximum(0.0, 1 - (w * dt / 2) ** 2))


def leapfrog_group_velocity(k, L, C, dx, dt):
    """Signed group velocity d(leapfrog_omega)/dk of the positive-frequency mode."""
    w = dispersion_omega(k, L, C, dx)
    k = np.asarray(k, dtype=float)
    kr = (k + np.pi / dx) % (2 * np.pi / dx) - np.pi / dx
    root = np.sqrt(np.maximum(1e-300, 1 - (w * dt / 2) ** 2))
    return dx / np.sqrt(L * C) * np.cos(kr * dx / 2) * np.sign(kr) / root
