"""Wave packets, norm-resolved spectra and horizon scattering experiments.

Mode conversion at a horizon is measured classically.  A positive-frequency
outgoing packet is placed in the subcritical region and the linear lattice is
run backward in time: the packet retraces its history through the horizon and
ends up as short-wavelength waves travelling toward the horizon (in forward
time).  Splitting those waves into positive- and negative-norm parts gives the
Bogoliubov weights |alpha|^2 and |beta|^2 for every co-moving frequency.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize, minimize_scalar

from .errors import ConfigError, FitError
from .geometry import HBAR, K_B, VelocityProfile, capacitance_from_profile, find_horizons
from .ladder import (Boundary, CapacitanceSchedule, LadderConfig, LadderState, evolve, init_ladder,
                     kg_norm, leapfrog_eigen_omega, leapfrog_group_velocity, leapfrog_omega)

log = logging.getLogger(__name__)

USABLE_FRACTION = 1e-6
UNIFORM_RTOL = 1e-10


# ---------------------------------------------------------------- packets

@dataclass(frozen=True)
class WavePacket:
    """Gaussian packet in k around +k0 (right) or -k0 (left), centred at x0."""

    k0: float
    sigma_k: float
    x0: float
    amplitude: float = 1.0
    branch: str = "right"

    def __post_init__(self):
        if self.branch not in ("right", "left"):
            raise ConfigError(f"branch must be 'right' or 'left', got {self.branch!r}")
        if not self.sigma_k > 0:
            raise ConfigError("sigma_k must be positive")
        if not self.k0 > 0:
            raise ConfigError("k0 must be positive")

    @property
    def k_center(self) -> float:
        return self.k0 if self.branch == "right" else -self.k0


def _caps_array(caps, t=0.0):
    if isinstance(caps, CapacitanceSchedule):
        return caps.values(t)
    return np.asarray(caps, dtype=float)


def make_packet(packet: WavePacket, config: LadderConfig, caps_at_t0, x_origin: float = 0.0,
                complex_field: bool = False, leak_tol: float = 1e-6):
    """Single-branch packet (a, q) on the lattice.

    Every Fourier mode b(k) of the Gaussian envelope is paired with the charge
    of the positive-frequency leapfrog eigenmode, Q(k) = -i w L C A(k), so the
    packet moves in the declared direction without a counter-propagating part.
    The peak |A| equals ``packet.amplitude``.  Raises ConfigError if more than
    ``leak_tol`` of the packet weight falls on cells whose capacitance differs
    from the value at x0 (or inside an absorbing sponge).
    """
    n, dx, L = config.n_cells, config.dx, config.inductance
    if not packet.k0 < np.pi / dx:
        raise ConfigError(f"k0={packet.k0} outside the Brillouin zone (pi/dx={np.pi / dx:g})")
    caps = _caps_array(caps_at_t0)
    x = x_origin + dx * np.arange(n)
    i0 = int(np.clip(np.rint((packet.x0 - x_origin) / dx), 0, n - 1))
    c0 = caps[i0]
    dtype = complex if complex_field else float
    if packet.amplitude == 0:
        return np.zeros(n, dtype), np.zeros(n, dtype)
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    b = np.exp(-(k - packet.k_center) ** 2 / (2 * packet.sigma_k ** 2)) * np.exp(-1j * k * (packet.x0 - x_origin))
    weff = leapfrog_eigen_omega(k, L, c0, dx, config.dt)
    A = np.fft.ifft(b)
    Q = np.fft.ifft(-1j * weff * L * c0 * b)
    scale = packet.amplitude / np.max(np.abs(A))
    A *= scale
    Q *= scale
    bad = np.abs(caps / c0 - 1) > 1e-9
    if not config.boundary.is_periodic and config.boundary.sponge_width:
        w = config.boundary.sponge_width
        bad[:w] = True
        bad[n - w:] = True
    weight = np.abs(A) ** 2 + np.abs(Q) ** 2 / (L * c0)
    leak = weight[bad].sum() / weight.sum()
    if leak > leak_tol:
        raise ConfigError(f"packet overlaps the non-uniform region (leakage {leak:.2e} > {leak_tol:g})")
    if complex_field:
        return A, Q
    return A.real.copy(), Q.real.copy()


# ---------------------------------------------------------------- frequency measurement

def measure_frequency(series, dt: float, positive: bool = True) -> float:
    """Dominant angular frequency of a sampled signal (Hann window, refined DTFT peak).

    The convention is series ~ exp(-i w t); for real input the positive peak
    is returned.
    """
    y = np.asarray(series)
    n = y.size
    if n < 8:
        raise ConfigError("need at least 8 samples")
    w = np.hanning(n)
    t = dt * np.arange(n)
    yw = (y - (y.mean() if np.isrealobj(y) else 0)) * w
    m = 16 * n
    mag = np.abs(np.fft.fft(yw, m))
    freqs = -2 * np.pi * np.fft.fftfreq(m, d=dt)
    if positive or np.isrealobj(y):
        mag = np.where(freqs > 0, mag, 0)
    j = int(np.argmax(mag))
    step = 2 * np.pi / (m * dt)

    def neg(om):
        return -abs(np.sum(yw * np.exp(1j * om * t)))

    res = minimize_scalar(neg, bounds=(freqs[j] - 2 * step, freqs[j] + 2 * step), method="bounded",
                          options={"xatol": 1e-14 * max(1.0, abs(freqs[j]))})
    return float(res.x)


def comoving_resample(history, times, v: float, chi_grid, dx: float = 1.0, x_origin: float = 0.0,
                      profile: Optional[VelocityProfile] = None, band=None):
    """Sample A(chi = x + v t, t) on a regular (t, chi) grid by cubic interpolation in x.

    history has shape (n_times, n_cells).  If ``profile`` is given the chi
    window must lie where c^2 is uniform; ``band`` = (k_max, omega_max) checks
    that both axes are sampled above the Nyquist rate.
    """
    hist = np.asarray(history)
    times = np.asarray(times, dtype=float)
    chi = np.asarray(chi_grid, dtype=float)
    if hist.ndim != 2 or hist.shape[0] != times.size:
        raise ConfigError("history must have shape (len(times), n_cells)")
    x = x_origin + dx * np.arange(hist.shape[1])
    if profile is not None:
        c2 = profile.c2(chi)
        if np.max(np.abs(c2 / c2[0] - 1)) > UNIFORM_RTOL:
            raise ConfigError("co-moving window touches the non-uniform region")
    if band is not None:
        k_max, w_max = band
        if k_max * dx >= np.pi:
            raise ConfigError(f"lattice pitch undersamples k_max={k_max:g}")
        if times.size > 1:
            dth = np.max(np.diff(times))
            if dth * (w_max + abs(v) * k_max) >= np.pi:
                raise ConfigError(f"history stride {dth:g} undersamples the co-moving band")
    out = np.empty((times.size, chi.size), dtype=hist.dtype)
    for j, t in enumerate(times):
        xs = chi - v * t
        if xs.min() < x[0] - 1e-12 * dx or xs.max() > x[-1] + 1e-12 * dx:
            raise ConfigError(f"window leaves the lattice at t={t:g}")
        out[j] = CubicSpline(x, hist[j])(xs)
    return out


def comoving_peak(field, dt: float, dchi: float):
    """(omega', k) of the dominant plane wave exp(i(k chi - omega' t)) in a (t, chi) field."""
    f = np.asarray(field)
    nt, nx = f.shape
    win = np.outer(np.hanning(nt), np.hanning(nx))
    fw = f * win
    pt, px = 8 * nt, 8 * nx
    mag = np.abs(np.fft.fft2(fw, (pt, px)))
    om = -2 * np.pi * np.fft.fftfreq(pt, d=dt)
    kk = 2 * np.pi * np.fft.fftfreq(px, d=dchi)
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    t = dt * np.arange(nt)
    s = dchi * np.arange(nx)

    def neg(p):
        return -abs(np.exp(1j * p[0] * t) @ fw @ np.exp(-1j * p[1] * s))

    res = minimize(neg, [om[i], kk[j]], method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
    return float(res.x[0]), float(res.x[1])


# ---------------------------------------------------------------- norm split

@dataclass(frozen=True)
class NormSplit:
    """Norm carried by each lattice mode of a field in a uniform region.

    n_pos / n_neg are the magnitudes of the positive and negative norm parts
    (the norm sign follows the frequency in the rest frame of the ladder).
    omega_pos / omega_neg are their co-moving frequencies and group_pos /
    group_neg their co-moving group velocities.
    """

    k: np.ndarray
    n_pos: np.ndarray
    n_neg: np.ndarray
    omega_pos: np.ndarray
    omega_neg: np.ndarray
    group_pos: np.ndarray
    group_neg: np.ndarray
    dk: float
    v: float
    dx: float

    @property
    def total_pos(self) -> float:
        return float(self.n_pos.sum())

    @property
    def total_neg(self) -> float:
        return float(self.n_neg.sum())


def wrap_comoving(omega, v: float, dx: float):
    """Reduce co-moving frequencies modulo the lattice period 2 pi |v| / dx."""
    if v == 0:
        return np.asarray(omega)
    period = 2 * np.pi * abs(v) / dx
    return (np.asarray(omega) + period / 2) % period - period / 2


def split_norm(a, q, capacitance: float, config: LadderConfig, v: float = 0.0, pad: int = 8,
               resolution: Optional[float] = None) -> NormSplit:
    """Resolve a field window in a uniform region into per-mode norm weights.

    Each Fourier mode is split into the positive- and negative-frequency
    leapfrog eigenvectors; the weights sum to the total indefinite norm
    (n_pos - n_neg).  ``pad`` zero-pads the window to refine the k grid.  If
    ``resolution`` (a co-moving frequency width) is given, the window must be
    long enough to resolve it.
    """
    a = np.asarray(a)
    q = np.asarray(q)
    if a.shape != q.shape or a.ndim != 1:
        raise ConfigError("a and q must be matching 1-d arrays")
    L, dx, dt, C = config.inductance, config.dx, config.dt, float(capacitance)
    n = pad * a.size
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    weff = leapfrog_eigen_omega(k, L, C, dx, dt)
    wt = leapfrog_omega(k, L, C, dx, dt)
    vg = leapfrog_group_velocity(k, L, C, dx, dt)
    Ah = np.fft.fft(a, n)
    Qh = np.fft.fft(q, n)
    live = weff > 0
    r = np.zeros(n, dtype=complex)
    r[live] = 1j * Qh[live] / (weff[live] * L * C)
    n_pos = np.where(live, weff * L * L * C * np.abs((Ah + r) / 2) ** 2 / n, 0.0)
    n_neg = np.where(live, weff * L * L * C * np.abs((Ah - r) / 2) ** 2 / n, 0.0)
    split = NormSplit(k, n_pos, n_neg, wrap_comoving(wt + v * k, v, dx), wrap_comoving(-wt + v * k, v, dx),
                      vg + v, -vg + v, 2 * np.pi / (n * dx), float(v), float(dx))
    if resolution is not None:
        nz = np.flatnonzero(np.abs(a) + np.abs(q) > 0)
        length = dx * (nz[-1] - nz[0] + 1) if nz.size else 0.0
        wts = np.concatenate([n_pos, n_neg])
        g = np.abs(np.concatenate([split.group_pos, split.group_neg]))
        g_typ = float(np.sum(wts * g) / np.sum(wts)) if wts.sum() > 0 else 0.0
        if length == 0 or 2 * np.pi * g_typ / length > resolution:
            raise ConfigError(f"window of length {length:g} cannot resolve d(omega')={resolution:g}")
    return split


def _runs(omega, select, jump):
    """Split selected indices into runs along which omega is smooth and monotone."""
    idx = np.flatnonzero(select)
    if idx.size == 0:
        return []
    out = []
    for r in np.split(idx, np.flatnonzero(np.diff(idx) != 1) + 1):
        if r.size < 3:
            continue
        d = np.diff(omega[r])
        cut = np.flatnonzero((np.sign(d[1:]) != np.sign(d[:-1])) | (np.abs(d[1:]) > jump)) + 1
        out.extend(p for p in np.split(r, cut + 1) if p.size >= 2)
    return out


def binned_norm(split: NormSplit, sign: int, select, edges, fine: int = 20) -> np.ndarray:
    """Norm per co-moving frequency bin for the selected modes of one norm sign.

    The spectral density N(k) / (dk |d omega'/dk|) is integrated over each bin
    along every monotone run of the dispersion curve, which avoids the
    aliasing of direct histogramming when bins hold few k samples.
    """
    if sign > 0:
        om, nk, g = split.omega_pos, split.n_pos, split.group_pos
    else:
        om, nk, g = split.omega_neg, split.n_neg, split.group_neg
    edges = np.asarray(edges, dtype=float)
    out = np.zeros(edges.size - 1)
    jump = np.pi * abs(split.v) / split.dx if split.v else np.inf
    for r in _runs(om, np.asarray(select), jump):
        w = om[r]
        rho = nk[r] / (split.dk * np.maximum(np.abs(g[r]), 1e-300))
        o = np.argsort(w)
        w, rho = w[o], rho[o]
        for i in range(edges.size - 1):
            lo, hi = max(edges[i], w[0]), min(edges[i + 1], w[-1])
            if hi <= lo:
                continue
            grid = np.linspace(lo, hi, fine)
            out[i] += np.trapezoid(np.interp(grid, w, rho), grid)
    return out


# ---------------------------------------------------------------- temperature and flux

def fit_temperature(samples: Sequence) -> tuple:
    """Least-squares temperature from (omega', beta2/alpha2) pairs.

    ln(alpha2/beta2) = omega'/T is fitted through the origin; r^2 is measured
    against the mean of the log ratios.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("samples must be (omega, ratio) pairs")
    if arr.shape[0] < 4:
        raise FitError(f"need at least 4 samples, got {arr.shape[0]}")
    om, ratio = arr[:, 0], arr[:, 1]
    if np.any(~np.isfinite(arr)):
        raise FitError("non-finite samples")
    if np.any(ratio <= 0) or np.any(ratio >= 1):
        raise FitError("ratios beta2/alpha2 must lie in (0, 1)")
    if np.ptp(om) == 0:
        raise FitError("ill-conditioned fit: all frequencies equal")
    y = -np.log(ratio)
    slope = np.sum(om * y) / np.sum(om * om)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1 - np.sum((y - slope * om) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(1 / slope), float(r2)


def hawking_flux(T: float, units: str = "sim") -> float:
    """Radiated power pi (k_B T)^2 / (12 hbar); simulation units set hbar = k_B = 1."""
    if T < 0:
        raise ConfigError(f"temperature must be >= 0, got {T}")
    if units == "sim":
        return np.pi * T * T / 12
    if units == "si":
        return np.pi * (K_B * T) ** 2 / (12 * HBAR)
    raise ConfigError(f"unknown unit system {units!r}")


def flux_mode_sum(T: float, speed: float, v: float, dx: float, n_cells: int, inductance: float = 1.0) -> float:
    """Energy flux of thermally occupied outgoing lattice modes, summed mode by mode.

    Sums omega' n(omega') |v_g| dk / 2 pi over the k grid of a line of n_cells
    cells, for the branch that leaves the horizon through a uniform region of
    wave speed ``speed`` with drift ``v`` (hbar = k_B = 1).
    """
    if T <= 0:
        return 0.0
    C = dx * dx / (inductance * speed * speed)
    dk = 2 * np.pi / (n_cells * dx)
    k = dk * np.arange(1, n_cells // 2 + 1)
    om = 2 / np.sqrt(inductance * C) * np.sin(k * dx / 2) + v * k
    g = speed * np.cos(k * dx / 2) + v
    keep = (g > 0) & (om > 0)
    with np.errstate(over="ignore"):
        occ = 1.0 / np.expm1(om[keep] / T)
    return float(np.sum(om[keep] * occ * g[keep]) * dk / (2 * np.pi))


# ---------------------------------------------------------------- scattering

@dataclass(frozen=True)
class ScatterRun:
    """Numerical parameters of a scattering experiment (lengths in lattice units of x)."""

    n_cells: int = 4096
    dx: float = 0.1
    inductance: float = 1.0
    duration: float = 230.0
    lead: float = 45.0
    sponge: float = 20.0
    max_damping: float = 3.0
    taper: float = 20.0
    window_start: Optional[float] = None
    window_length: Optional[float] = None
    pad: int = 8
    band: Optional[tuple] = None
    bin_width: Optional[float] = None
    dt: Optional[float] = None
    stability_factor: float = 0.2


@dataclass
class ScatterResult:
    samples: list
    t_fit: Optional[float]
    kappa_predicted: Optional[float]
    fit_r2: Optional[float]
    band: tuple
    bins: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def omega(self):
        return np.array([s[0] for s in self.samples])

    @property
    def alpha2(self):
        return np.array([s[1] for s in self.samples])

    @property
    def beta2(self):
        return np.array([s[2] for s in self.samples])

    @property
    def normalization_error(self) -> float:
        """max |alpha2 + transmitted - beta2 - 1| over usable bins.

        The transmitted part (probe norm that never met the horizon) is zero
        when the horizon converts everything, leaving alpha2 - beta2 = 1.
        """
        if not self.samples:
            return 0.0
        u = self.bins["usable"]
        total = self.bins["alpha2"][u] + self.bins["residual_out"][u] - self.bins["beta2"][u]
        return float(np.max(np.abs(total - 1)))

    def thermality_deviation(self) -> float:
        """RMS deviation of ln(alpha2/beta2) from the line omega'/T_fit, relative to its mean."""
        om, a2, b2 = self.omega, self.alpha2, self.beta2
        ok = (b2 > 0) & (a2 > 0)
        if self.t_fit is None or ok.sum() == 0:
            return float("nan")
        y = np.log(a2[ok] / b2[ok])
        return float(np.sqrt(np.mean((y - om[ok] / self.t_fit) ** 2)) / np.mean(np.abs(y)))


def _mirror(profile: VelocityProfile) -> VelocityProfile:
    c2 = profile.c2
    dc = profile.dc_dchi
    lo, hi = profile.support
    return VelocityProfile(lambda chi: c2(-np.asarray(chi)), -profile.v, (-hi, -lo), profile.c2_range,
                           profile.family + "-mirrored", profile.params, tuple(-np.asarray(profile.knots)),
                           None if dc is None else (lambda chi: -dc(-np.asarray(chi))))


def _uniform_start(profile: VelocityProfile, chi_ref: float, c2_far: float) -> float:
    """Smallest distance beyond chi_ref after which c^2 stays at its +chi asymptote."""
    lo, hi = profile.support
    if hi <= chi_ref:
        return 0.0
    grid = np.linspace(chi_ref, hi, 20001)
    dev = np.abs(profile.c2(grid) / c2_far - 1) > UNIFORM_RTOL
    if not dev.any():
        return 0.0
    return float(grid[min(np.flatnonzero(dev)[-1] + 1, grid.size - 1)] - chi_ref)


def scatter_experiment(profile: VelocityProfile, packet: WavePacket, run: ScatterRun = ScatterRun(),
                       progress: bool = False) -> ScatterResult:
    """Bogoliubov weights and temperature of the horizon in ``profile``.

    ``packet`` describes the outgoing probe at t = 0 (x0 is measured from the
    horizon, or from chi = 0 without one) and must travel away from the
    horizon on the subcritical side.  The line is evolved backward for
    ``run.duration``; the snapshot on the far subcritical side is split into
    norm-resolved spectra normalised by the outgoing norm per frequency bin.
    """
    report = find_horizons(profile)
    if any(h.degenerate for h in report.crossings):
        raise ConfigError("profile has a degenerate horizon")
    if len(report.black) > 1:
        raise ConfigError("profile must contain a single black-hole horizon")
    horizon = report.black[0] if report.black else None
    if horizon is None and report.white:
        raise ConfigError("profile has only a white-hole horizon")
    kappa = horizon.kappa_g if horizon else None

    # orient so that the subcritical side (and the outgoing packet) lies toward +chi
    mirrored = packet.branch == "left"
    prof = _mirror(profile) if mirrored else profile
    chi_h = 0.0
    if horizon is not None:
        chi_h = -horizon.chi if mirrored else horizon.chi
        slope = float(prof.c2(np.array([chi_h + 1e-6]))[0] - prof.c2(np.array([chi_h - 1e-6]))[0])
        if slope <= 0:
            raise ConfigError("packet branch must point away from the horizon on the subcritical side")
    v = prof.v
    if v > 0 and horizon is not None:
        raise ConfigError("inconsistent drift orientation")
    dx, N, L = run.dx, run.n_cells, run.inductance
    c2_far = float(prof.c2(np.array([prof.support[1] + 1.0]))[0])
    c_far = np.sqrt(c2_far)
    if c_far <= abs(v):
        raise ConfigError("the +chi asymptotic region is not subcritical")
    c_max = np.sqrt(prof.c2_range[1])
    if run.dt is None:
        if v != 0:
            # commensurate step: the schedule repeats exactly after one cell of drift
            m = int(np.ceil(c_max / (run.stability_factor * abs(v))))
            dt = dx / (abs(v) * m)
        else:
            dt = run.stability_factor * dx / c_max
    else:
        dt = run.dt
    sponge = int(round(run.sponge / dx))
    config = LadderConfig(N, L, dx, dt, Boundary.absorbing(sponge, run.max_damping), run.stability_factor)
    d_pkt = abs(packet.x0)
    x_pkt = chi_h + d_pkt
    x_hi = x_pkt + run.lead
    x_origin = x_hi - (N - 1) * dx
    n_steps = int(round(run.duration / dt))
    t_end = -n_steps * dt
    # the horizon drifts to x = chi_h - v t and must stay clear of the sponges
    for t in (0.0, t_end):
        xh = chi_h - v * t
        if not (x_origin + run.sponge < xh < x_hi - run.sponge):
            raise ConfigError("line too short: the horizon leaves the lattice during the run")
    caps = capacitance_from_profile(prof, config, x_origin)
    config.check(caps)
    if packet.amplitude == 0:
        raise ConfigError("probe amplitude must be non-zero")
    pk = WavePacket(packet.k0, packet.sigma_k, x_pkt, packet.amplitude, "right")
    c_pkt = dx * dx / (L * c2_far)
    a0, q0 = make_packet(pk, config, caps.values(0.0), x_origin, complex_field=True)
    state = init_ladder(config, a0, q0, caps)
    initial = split_norm(a0, q0, c_pkt, config, v, run.pad)
    norm0 = kg_norm(state, config)

    log.info("scatter: %d steps of dt=%g backward", n_steps, dt)
    final = evolve(state, config, caps, n_steps, dt=-dt, progress=progress)

    # analysis window on the far subcritical side, clear of the sponge
    x = x_origin + dx * np.arange(N)
    chi = x + v * t_end
    if horizon is not None:
        start = _uniform_start(prof, chi_h, c2_far)
        if run.window_start is not None:
            if run.window_start < start:
                raise ConfigError(f"window_start {run.window_start:g} inside the non-uniform region (< {start:g})")
            start = run.window_start
        lo = chi_h + start
    else:
        # no preferred side: watch the interior from where the +chi asymptote begins
        lo = x_origin + run.sponge + v * t_end
        lo += _uniform_start(prof, lo, c2_far)
        if run.window_start is not None:
            lo = max(lo, run.window_start)
    hi = x_hi - run.sponge + v * t_end
    if run.window_length is not None:
        hi = min(hi, lo + run.window_length)
    if hi - lo < 2 * run.taper:
        raise ConfigError("analysis window shorter than its tapers")
    ramp = np.minimum(np.clip((chi - lo) / run.taper, 0, 1), np.clip((hi - chi) / run.taper, 0, 1))
    weight = 0.5 - 0.5 * np.cos(np.pi * ramp)
    c_win = caps.values(t_end)[weight > 0]
    if np.max(np.abs(c_win / c_pkt - 1)) > UNIFORM_RTOL:
        raise ConfigError("analysis window touches the non-uniform region")
    out = split_norm(final.a * weight, final.q * weight, c_pkt, config, v, run.pad)

    scale = kappa if kappa else None
    if run.band is not None:
        band = (float(run.band[0]), float(run.band[1]))
    elif scale is not None:
        band = (scale / 2, 3 * scale)
    else:
        raise ConfigError("a fit band is required when the profile has no horizon")
    width = run.bin_width or (scale / 10 if scale else (band[1] - band[0]) / 25)
    nb = max(1, int(round((band[1] - band[0]) / width)))
    edges = np.linspace(band[0], band[1], nb + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])

    n_out = binned_norm(initial, +1, (initial.group_pos > 0) & (initial.k > 0), edges)
    a_in = binned_norm(out, +1, out.group_pos < 0, edges)
    b_in = binned_norm(out, -1, out.group_neg < 0, edges)
    residual = binned_norm(out, +1, out.group_pos > 0, edges)
    # bins holding a negligible share of the probe carry only round-off
    usable = n_out > USABLE_FRACTION * initial.total_pos
    alpha2 = np.where(usable, a_in / np.where(usable, n_out, 1), np.nan)
    beta2 = np.where(usable, b_in / np.where(usable, n_out, 1), np.nan)
    samples = [(float(w), float(a), float(b)) for w, a, b, u in zip(centers, alpha2, beta2, usable) if u]

    t_fit = r2 = None
    if horizon is not None:
        pts = [(w, b / a) for w, a, b in samples if a > 0 and 0 < b < a]
        if len(pts) < 4:
            raise FitError(f"only {len(pts)} usable bins in band {band}")
        t_fit, r2 = fit_temperature(pts)

    meta = {
        "profile_family": profile.family, **{f"profile_{k}": v_ for k, v_ in profile.params.items()},
        "drift": profile.v, "kappa_predicted": kappa, "n_cells": N, "dx": dx, "dt": dt,
        "inductance": L, "duration": n_steps * dt, "direction": "backward", "pad": run.pad,
        "window": "raised-cosine taper", "taper": run.taper, "window_chi": (lo, hi),
        "band": band, "bin_width": width, "k0": packet.k0, "sigma_k": packet.sigma_k,
        "packet_distance": d_pkt, "norm_initial": norm0, "norm_final": kg_norm(final, config),
        "mirrored": mirrored, "c_subcritical": float(c_far), "v_oriented": float(v),
    }
    bins = {"omega": centers, "n_out": n_out, "alpha2": alpha2, "beta2": beta2,
            "residual_out": residual / np.where(usable, n_out, 1), "usable": usable}
    return ScatterResult(samples, t_fit, kappa, r2, band, bins, meta)
