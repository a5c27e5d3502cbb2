"""Velocity profiles, effective metric, horizons and the SI unit layer.

A profile prescribes the propagation speed c(chi) in the co-moving coordinate
chi = x + v t; the pattern is static in chi and moves toward -x in the lab for
v > 0.  In chi the medium streams at velocity +v, so a crossing |v| = c is a
black-hole horizon when the flow passes from the subcritical (c > |v|) to the
supercritical (c < |v|) side, i.e. when v * dc/dchi < 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import constants as _const
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import ConfigError
from .ladder import CapacitanceSchedule, LadderConfig

HBAR = _const.hbar
K_B = _const.k
C0 = _const.c
EPS0 = _const.epsilon_0
MU0 = _const.mu_0

N_SCAN = 1024
ROOT_TOL_FRACTION = 1e-10


# ---------------------------------------------------------------- units

def hawking_temperature_SI(kappa_g: float) -> float:
    """Temperature in kelvin for a surface gravity in 1/s: hbar kappa / (2 pi k_B)."""
    if kappa_g < 0:
        raise ConfigError(f"surface gravity must be >= 0, got {kappa_g}")
    return HBAR * kappa_g / (2 * np.pi * K_B)


@dataclass(frozen=True)
class UnitScale:
    """Seconds and meters per simulation unit of time and length."""

    time_s: float = 1.0
    length_m: float = 1.0

    def rate_si(self, rate_sim: float) -> float:
        return rate_sim / self.time_s

    def kelvin(self, temperature_sim: float) -> float:
        # T_sim is an energy in units of hbar / time_unit
        return HBAR * temperature_sim / (K_B * self.time_s)

    def watts(self, power_sim: float) -> float:
        return HBAR * power_sim / self.time_s ** 2


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class VelocityProfile:
    """Squared propagation speed c2(chi) in the co-moving frame plus the drift v.

    ``c2`` is vectorised and constant outside ``support``.  ``c2_range`` holds
    the exact (min, max) of c2 over all chi.
    """

    c2: Callable[[np.ndarray], np.ndarray]
    v: float
    support: tuple
    c2_range: tuple
    family: str = "custom"
    params: dict = field(default_factory=dict)
    knots: tuple = ()
    dc_dchi: Optional[Callable] = None

    def __post_init__(self):
        lo, hi = self.support
        if not hi > lo:
            raise ConfigError(f"support must be an increasing interval, got {self.support}")
        if not self.c2_range[0] > 0:
            raise ConfigError("c^2 must be strictly positive")
        if not np.isfinite(self.v):
            raise ConfigError("drift speed must be finite")

    def speed(self, chi):
        return np.sqrt(self.c2(np.asarray(chi, dtype=float)))

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]

    def with_drift(self, v: float) -> "VelocityProfile":
        return VelocityProfile(self.c2, float(v), self.support, self.c2_range, self.family,
                               {**self.params, "v": float(v)}, self.knots, self.dc_dchi)

    def asymptotic_speeds(self):
        lo, hi = self.support
        return float(self.speed(lo - 1.0)), float(self.speed(hi + 1.0))


def tanh_profile(c_mid: float, delta_c: float, width: float, v: float) -> VelocityProfile:
    """c(chi) = c_mid + delta_c tanh(chi / width)."""
    if width <= 0:
        raise ConfigError("tanh width must be positive")
    if c_mid - abs(delta_c) <= 0:
        raise ConfigError("tanh profile must keep c > 0")

    def c2(chi):
        return (c_mid + delta_c * np.tanh(np.asarray(chi) / width)) ** 2

    def dc(chi):
        return delta_c / width / np.cosh(np.asarray(chi) / width) ** 2

    # tanh is exactly +-1 in double precision beyond |x| ~ 19.1
    ext = 20.0 * width
    lo, hi = sorted(((c_mid - delta_c) ** 2, (c_mid + delta_c) ** 2))
    return VelocityProfile(c2, float(v), (-ext, ext), (lo, hi), "tanh",
                           {"c_mid": c_mid, "delta_c": delta_c, "width": width, "v": v}, (), dc)


def linear_profile(c0: float, gradient: float, v: float, half_width: float) -> VelocityProfile:
    """c(chi) = c0 + gradient * chi, clamped to |chi| <= half_width."""
    if half_width <= 0:
        raise ConfigError("half_width must be positive")
    ends = (c0 - gradient * half_width, c0 + gradient * half_width)
    if min(ends) <= 0:
        raise ConfigError("linear profile must keep c > 0 inside the clamp")

    def c2(chi):
        return (c0 + gradient * np.clip(chi, -half_width, half_width)) ** 2

    def dc(chi):
        chi = np.asarray(chi)
        return np.where(np.abs(chi) < half_width, gradient, 0.0)

    sq = sorted(e ** 2 for e in ends)
    return VelocityProfile(c2, float(v), (-half_width, half_width), (sq[0], sq[1]), "linear",
                           {"c0": c0, "gradient": gradient, "half_width": half_width, "v": v},
                           (-half_width, half_width), dc)


def table_profile(chi_points, c_points, v: float) -> VelocityProfile:
    """Shape-preserving piecewise-cubic speed through tabulated (chi, c) points."""
    chi_points = np.asarray(chi_points, dtype=float)
    c_points = np.asarray(c_points, dtype=float)
    if chi_points.ndim != 1 or chi_points.size < 2 or chi_points.shape != c_points.shape:
        raise ConfigError("profile table needs matching 1-d arrays with >= 2 points")
    if np.any(np.diff(chi_points) <= 0):
        raise ConfigError("profile table positions must increase")
    if np.any(c_points <= 0):
        raise ConfigError("profile table speeds must be positive")
    interp = PchipInterpolator(chi_points, c_points, extrapolate=False)
    deriv = interp.derivative()
    lo, hi = chi_points[0], chi_points[-1]

    def c2(chi):
        return interp(np.clip(chi, lo, hi)) ** 2

    def dc(chi):
        chi = np.asarray(chi, dtype=float)
        inside = (chi > lo) & (chi < hi)
        return np.where(inside, deriv(np.clip(chi, lo, hi)), 0.0)

    # monotone cubic pieces: extremes sit on the knots
    return VelocityProfile(c2, float(v), (lo, hi), (c_points.min() ** 2, c_points.max() ** 2),
                           "table", {"v": v}, tuple(chi_points), dc)


def uniform_profile(c: float, v: float = 0.0) -> VelocityProfile:
    if c <= 0:
        raise ConfigError("speed must be positive")
    return VelocityProfile(lambda chi: np.full(np.shape(chi), float(c) ** 2), float(v), (-1.0, 1.0),
                           (c * c, c * c), "uniform", {"c": c, "v": v}, (),
                           lambda chi: np.zeros(np.shape(chi)))


def speed_from_permittivity(eps, design: "CellDesign"):
    """Propagation speed sqrt(dz / (eps mu Dz)) for a dielectric permittivity eps."""
    return np.sqrt(design.dielectric_gap / (np.asarray(eps) * design.permeability * design.cell_height))


# ---------------------------------------------------------------- schedule

def capacitance_from_profile(profile: VelocityProfile, config: LadderConfig,
                             x_origin: float = 0.0) -> CapacitanceSchedule:
    """C_n(t) = dx^2 / (L c^2(x_n + v t)) with x_n = x_origin + n dx."""
    L, dx = config.inductance, config.dx
    x = x_origin + dx * np.arange(config.n_cells)
    v = profile.v
    scale = dx * dx / L

    def fn(t):
        return scale / profile.c2(x + v * t)

    c2lo, c2hi = profile.c2_range
    return CapacitanceSchedule(fn, config.n_cells, scale / c2hi, scale / c2lo,
                               static=(v == 0))


def speed_from_capacitance(caps, inductance: float, dx: float):
    return dx / np.sqrt(inductance * np.asarray(caps))


# ---------------------------------------------------------------- metric

@dataclass(frozen=True)
class EffectiveMetric:
    g_inv: np.ndarray
    g: np.ndarray
    c: float
    v: float

    @property
    def g_tt(self) -> float:
        return float(self.g[0, 0])


def effective_metric(c: float, v: float) -> EffectiveMetric:
    """Inverse metric rows (1, v, 0), (v, v^2 - c^2, 0), (0, 0, -c^2) and its inverse."""
    if not c > 0:
        raise ConfigError(f"speed must be positive, got {c}")
    c2 = c * c
    g_inv = np.array([[1.0, v, 0.0], [v, v * v - c2, 0.0], [0.0, 0.0, -c2]])
    g = np.array([[(c2 - v * v) / c2, v / c2, 0.0], [v / c2, -1 / c2, 0.0], [0.0, 0.0, -1 / c2]])
    return EffectiveMetric(g_inv, g, float(c), float(v))


# ---------------------------------------------------------------- horizons

@dataclass(frozen=True)
class Horizon:
    chi: float
    kind: str  # "black", "white" or "degenerate"
    kappa_g: float
    temperature: float
    temperature_kelvin: float
    degenerate: bool = False


@dataclass(frozen=True)
class HorizonReport:
    crossings: tuple
    v: float
    tol: float

    @property
    def black(self):
        return [h for h in self.crossings if h.kind == "black"]

    @property
    def white(self):
        return [h for h in self.crossings if h.kind == "white"]

    def __len__(self):
        return len(self.crossings)


def _bisect(f, a, b, fa, tol):
    # run past tol to the last representable midpoint so the root error does
    # not leak into the finite-difference slope taken with step tol
    while True:
        m = 0.5 * (a + b)
        if not a < m < b:
            return m
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m


def find_horizons(profile: VelocityProfile, tol: Optional[float] = None,
                  units: UnitScale = UnitScale(), n_scan: int = N_SCAN) -> HorizonReport:
    """Locate every sign change of c^2 - v^2 on the profile support.

    Roots are bracketed on a uniform scan grid and refined by bisection to
    ``tol`` (default 1e-10 of the support width).  Surface gravity is the
    centred finite difference of c with step ``tol``.  Zeros without a sign
    change (tangencies, flat stretches) are reported as degenerate.
    """
    lo, hi = profile.support
    if tol is None:
        tol = ROOT_TOL_FRACTION * (hi - lo)
    if tol <= 0:
        raise ConfigError("root tolerance must be positive")
    v2 = profile.v ** 2

    def f(chi):
        return float(profile.c2(np.array([chi]))[0]) - v2

    grid = np.linspace(lo, hi, n_scan)
    fg = profile.c2(grid) - v2
    roots = []  # (chi, degenerate)
    i = 0
    while i < n_scan - 1:
        if fg[i] == 0:
            j = i
            while j + 1 < n_scan and fg[j + 1] == 0:
                j += 1
            left = fg[i - 1] if i > 0 else 0.0
            right = fg[j + 1] if j + 1 < n_scan else 0.0
            isolated = j == i and left * right < 0
            roots.append((grid[i] if j == i else 0.5 * (grid[i] + grid[j]), not isolated))
            i = j + 1
            continue
        if fg[i] * fg[i + 1] < 0:
            roots.append((_bisect(f, grid[i], grid[i + 1], fg[i], tol), False))
        elif fg[i + 1] != 0 and i + 2 < n_scan and abs(fg[i + 1]) < abs(fg[i]) \
                and abs(fg[i + 1]) <= abs(fg[i + 2]) and fg[i] * fg[i + 2] > 0:
            # local extremum of |f| between samples: refine and flag touching roots
            res = minimize_scalar(lambda s: abs(f(s)), bounds=(grid[i], grid[i + 2]), method="bounded",
                                  options={"xatol": tol})
            if abs(res.fun) <= 1e-12 * max(1.0, v2):
                roots.append((float(res.x), True))
        i += 1

    crossings = []
    for chi, degenerate in roots:
        cp = np.sqrt(profile.c2(np.array([chi + tol]))[0])
        cm = np.sqrt(profile.c2(np.array([chi - tol]))[0])
        slope = (cp - cm) / (2 * tol)
        kappa = abs(slope)
        if degenerate or slope == 0:
            kind, degenerate = "degenerate", True
        else:
            kind = "black" if profile.v * slope < 0 else "white"
        temp = kappa / (2 * np.pi)
        crossings.append(Horizon(float(chi), kind, float(kappa), float(temp),
                                 float(units.kelvin(temp)), degenerate))
    return HorizonReport(tuple(crossings), float(profile.v), float(tol))


# ---------------------------------------------------------------- apparatus

@dataclass(frozen=True)
class CellDesign:
    """Dimensions of one unit cell of the wave-guide (SI units).

    dielectric_gap: thickness of the insulating slab between capacitor plates.
    fine_scale: next-smallest length of the hierarchy.
    cell_length: pitch along the line; cell_height and cell_depth: the other
    two cell dimensions; wavelength: of the guided waves.
    """

    dielectric_gap: float
    fine_scale: float
    cell_length: float
    cell_height: float
    cell_depth: float
    wavelength: float
    permittivity: float = EPS0
    permeability: float = MU0

    def __post_init__(self):
        for name in ("dielectric_gap", "fine_scale", "cell_length", "cell_height", "cell_depth",
                     "wavelength", "permittivity", "permeability"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be positive, got {val}")

    @property
    def inductance(self) -> float:
        return self.permeability * self.cell_length * self.cell_height / self.cell_depth

    def capacitance(self, permittivity: Optional[float] = None) -> float:
        eps = self.permittivity if permittivity is None else permittivity
        return eps * self.cell_length * self.cell_depth / self.dielectric_gap

    @property
    def speed(self) -> float:
        return float(np.sqrt(self.dielectric_gap / (self.permittivity * self.permeability * self.cell_height)))


@dataclass(frozen=True)
class HierarchyCheck:
    small: str
    large: str
    ratio: float
    passed: bool


@dataclass(frozen=True)
class HierarchyReport:
    checks: tuple
    inductance: float
    capacitance: float
    speed: float
    slowdown: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]


_LINKS = (("dielectric_gap", "fine_scale"), ("fine_scale", "cell_length"), ("fine_scale", "cell_height"),
          ("cell_length", "cell_depth"), ("cell_height", "cell_depth"), ("cell_depth", "wavelength"))


def validate_hierarchy(design: CellDesign, ratio: float = 10.0) -> HierarchyReport:
    """Check each required scale separation as large/small >= ratio."""
    if not ratio > 1:
        raise ConfigError(f"separation ratio must exceed 1, got {ratio}")
    checks = []
    for small, large in _LINKS:
        r = getattr(design, large) / getattr(design, small)
        checks.append(HierarchyCheck(small, large, float(r), bool(r >= ratio * (1 - 1e-12))))
    speed = design.speed
    return HierarchyReport(tuple(checks), design.inductance, design.capacitance(), speed, C0 / speed)
