"""Quantitative summaries: echo peaks, grating parameters, reflection spectra.

Grating extraction works on a profile sampled versus detuning (Hz).  The
"span" f of the grating is the detuning period of its oscillation; it is
estimated from the dominant DFT component with parabolic interpolation of the
log magnitude, which is robust against the broad envelope the profiles ride on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericsError
from .integrator import HahnSequence, IntegratorConfig, integrate
from .model import (TWO_PI, CavityParams, DriveParams, SubEnsemble, SystemState,
                    cooled_steady_state, pack_ensembles)
from .observables import PowerTrace

MERGE_DIP_HZ = 0.3e6        # dips closer than this count as one (unresolved)
SMOOTH_WINDOW_HZ = 0.1e6    # reflectance smoothing before dip search


@dataclass
class EchoReport:
    """Echo peaks after the second pulse, times measured from its center."""

    peak_times: np.ndarray          # s
    peak_photon_numbers: np.ndarray
    peak_powers_dbm: np.ndarray
    visible: np.ndarray             # bool, above the thermal floor
    n_visible: int
    period_estimate: float          # s, nan when fewer than two peaks
    noise_floor_dbm: float


@dataclass
class GratingReport:
    f_hz: float                     # detuning span of one oscillation
    amplitude: float                # half peak-to-valley of the central oscillation
    method: str = "dft-parabolic"
    low_confidence: bool = False


@dataclass
class ReflectionSpectrum:
    detuning: np.ndarray            # rad/s, probe minus cavity frequency
    reflectance: np.ndarray         # normalized to the far-detuned value
    g_eff: float                    # rad/s, dip splitting (0 if single dip)
    regime: str
    method: str
    dip_detunings: np.ndarray = field(default_factory=lambda: np.empty(0))
    meta: dict = field(default_factory=dict)


def _quadratic_peak(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through samples i-1, i, i+1."""
    if i <= 0 or i >= len(y) - 1:
        return float(x[i]), float(y[i])
    ya, yb, yc = y[i - 1], y[i], y[i + 1]
    denom = ya - 2.0 * yb + yc
    if denom == 0.0:
        return float(x[i]), float(y[i])
    off = 0.5 * (ya - yc) / denom
    step = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + off * step), float(yb - 0.25 * (ya - yc) * off)


def detect_echoes(power: PowerTrace, sequence: HahnSequence,
                  min_photon_number: float = 1e-2) -> EchoReport:
    """Local maxima of the photon number after the second pulse.

    Peaks are searched from half an echo period past the pulse center so the
    pulse itself and its ring-down are excluded; candidates closer than
    tau_eff/2 to a stronger peak are discarded.  Maxima below
    min_photon_number (default a hundredth of a photon) are numerical residue
    of partial refocusings, not emission events, and are dropped.
    """
    t_ref = sequence.pi_center
    t_min = t_ref + 0.5 * sequence.tau_eff
    sel = power.times >= t_min
    t = power.times[sel]
    n = power.photon_number[sel]
    candidates = []
    for i in range(1, len(n) - 1):
        if n[i] >= n[i - 1] and n[i] > n[i + 1] and n[i] > min_photon_number:
            t_pk, n_pk = _quadratic_peak(t, n, i)
            candidates.append((t_pk, max(n_pk, n[i])))
    if candidates:
        # partial half-period refocusings sit >= 100 dB below the echoes
        floor = 1e-10 * max(n_pk for _, n_pk in candidates)
        candidates = [c for c in candidates if c[1] > floor]
    kept: list[tuple[float, float]] = []
    for t_pk, n_pk in sorted(candidates, key=lambda c: -c[1]):
        if all(abs(t_pk - t0) > 0.5 * sequence.tau_eff for t0, _ in kept):
            kept.append((t_pk, n_pk))
    kept.sort()
    if not kept:
        return EchoReport(np.empty(0), np.empty(0), np.empty(0), np.empty(0, bool),
                          0, math.nan, power.noise_floor_dbm)
    times = np.array([t for t, _ in kept]) - t_ref
    numbers = np.array([v for _, v in kept])
    # convert using the same scale as the trace
    ref_idx = int(np.argmax(power.photon_number))
    scale = power.power_dbm[ref_idx] - 10.0 * np.log10(power.photon_number[ref_idx])
    with np.errstate(divide="ignore"):
        powers = 10.0 * np.log10(numbers) + scale
    visible = powers > power.noise_floor_dbm
    period = float(np.diff(times).mean()) if len(times) > 1 else math.nan
    return EchoReport(peak_times=times, peak_photon_numbers=numbers,
                      peak_powers_dbm=powers, visible=visible,
                      n_visible=int(visible.sum()), period_estimate=period,
                      noise_floor_dbm=power.noise_floor_dbm)


def extract_grating(profile: tuple[np.ndarray, np.ndarray],
                    window_hz: float = 1e6) -> GratingReport:
    """Grating span f and amplitude R from a profile versus detuning.

    profile is (detuning_hz, value) on a uniform grid.  The span is read off
    the dominant DFT bin (at least three oscillations across the window, so
    the envelope bins are skipped); R is half the peak-to-valley range within
    the central oscillation.
    """
    det, val = np.asarray(profile[0], float), np.asarray(profile[1], float)
    if len(det) != len(val) or len(det) < 8:
        raise ValueError("profile needs matching arrays with at least 8 samples")
    step = np.diff(det)
    if not np.allclose(step, step[0], rtol=1e-6):
        raise ValueError("profile must be sampled on a uniform detuning grid")
    sel = np.abs(det) <= window_hz
    det_w, val_w = det[sel], val[sel]
    n = len(det_w)
    if n < 8:
        raise ValueError("analysis window contains too few samples")
    span = det_w[-1] - det_w[0]

    centered = val_w - val_w.mean()
    hann = np.hanning(n)
    mag = np.abs(np.fft.rfft(centered * hann))
    k_min = 3                                   # >= 3 oscillations across the window
    if len(mag) <= k_min + 1:
        raise ValueError("analysis window too narrow for spectral estimation")
    k_peak = k_min + int(np.argmax(mag[k_min:]))
    safe = np.where(mag > 0, mag, 1e-300)
    k_interp, _ = _quadratic_peak(np.arange(len(mag), dtype=float), np.log(safe), k_peak)
    extent = n * (det_w[1] - det_w[0])          # DFT bin k = k cycles over n samples
    f_hz = extent / k_interp

    # a dominant component at the search floor usually means the window holds
    # fewer than three oscillations and the envelope leaked through
    low_confidence = k_peak == k_min or span / f_hz < 3.0
    central = np.abs(det_w) <= 0.5 * f_hz
    if central.sum() >= 3:
        amp = 0.5 * (val_w[central].max() - val_w[central].min())
    else:
        amp = 0.5 * (val_w.max() - val_w.min())
        low_confidence = True
    return GratingReport(f_hz=float(f_hz), amplitude=float(amp),
                         low_confidence=bool(low_confidence))


def jx_grating_period(snapshot: SystemState, omega_a: np.ndarray, n_spins: np.ndarray,
                      omega_c: float, window_hz: float = 1e6) -> GratingReport:
    """Detuning period of Jx/N at a snapshot, by the same spectral method."""
    det_hz = (omega_a - omega_c) / TWO_PI
    with np.errstate(invalid="ignore", divide="ignore"):
        jx_over_n = np.where(n_spins > 0, snapshot.sigma12.real, 0.0)
    return extract_grating((det_hz, jx_over_n), window_hz)


def fit_f_tau(taus: np.ndarray, fs_hz: np.ndarray) -> tuple[float, float]:
    """Least-squares line 1/f = slope * tau + intercept; needs >= 3 spread points."""
    taus = np.asarray(taus, float)
    fs = np.asarray(fs_hz, float)
    if len(taus) < 3 or len(taus) != len(fs):
        raise ValueError("need at least three (tau, f) pairs")
    if np.ptp(taus) <= 0:
        raise ValueError("tau values are degenerate; cannot fit a line")
    coeffs = np.polyfit(taus, 1.0 / fs, 1)
    return float(coeffs[0]), float(coeffs[1])


def _smooth(y: np.ndarray, half_width: int) -> np.ndarray:
    if half_width < 1:
        return y
    kernel = np.ones(2 * half_width + 1) / (2 * half_width + 1)
    pad = np.concatenate([np.full(half_width, y[0]), y, np.full(half_width, y[-1])])
    return np.convolve(pad, kernel, mode="valid")


def _find_dips(detuning: np.ndarray, reflectance: np.ndarray) -> np.ndarray:
    """Detunings (rad/s) of the two deepest well-separated reflectance minima."""
    res_hz = (detuning[1] - detuning[0]) / TWO_PI
    smoothed = _smooth(reflectance, max(1, int(round(SMOOTH_WINDOW_HZ / res_hz))))
    minima = [i for i in range(1, len(smoothed) - 1)
              if smoothed[i] <= smoothed[i - 1] and smoothed[i] < smoothed[i + 1]]
    minima.sort(key=lambda i: smoothed[i])
    chosen: list[int] = []
    for i in minima:
        if all(abs(detuning[i] - detuning[j]) > TWO_PI * MERGE_DIP_HZ for j in chosen):
            chosen.append(i)
        if len(chosen) == 2:
            break
    dips = [_quadratic_peak(detuning, smoothed, i)[0] for i in chosen]
    return np.sort(np.array(dips))


def reflection_spectrum(cavity: CavityParams, ensembles: list[SubEnsemble],
                        span: float = TWO_PI * 10e6, resolution: float = TWO_PI * 0.02e6,
                        method: str = "linearized", fwhm: float | None = None,
                        probe_amplitude: float | None = None) -> ReflectionSpectrum:
    """Weak-probe reflectance versus drive detuning, spins in the cooled state.

    linearized: populations held at the cooled fixed point; the steady state of
    the remaining linear system gives
        a = -i sqrt(kappa1) W / [i(w_c - w_d) + kappa/2
            + sum_a N_a g_a^2 p_a / (i(w_a - w_d) + decoherence_a)]
    with p_a = 1 - 2 s22_a, and r = 1 - i sqrt(kappa1) a / W.
    time-domain: integrates each probe point to steady state at weak drive and
    reads the same quantities off the settled amplitude (validation oracle).
    """
    ens = pack_ensembles(ensembles)
    cooled = cooled_steady_state(ensembles)
    pol = 1.0 - 2.0 * cooled.sigma22
    detunings = np.arange(-span, span + 0.5 * resolution, resolution)
    omega_probe = cavity.omega_c + detunings
    sqrt_k1 = math.sqrt(cavity.kappa1)

    if method == "linearized":
        refl = np.empty(len(detunings))
        for i, wd in enumerate(omega_probe):
            s_sum = np.add.reduce(
                ens.n_spins * ens.g**2 * pol / (1j * (ens.omega_a - wd) + ens.decoherence))
            denom = 1j * (cavity.omega_c - wd) + 0.5 * cavity.kappa + s_sum
            a_over_w = -1j * sqrt_k1 / denom
            refl[i] = abs(1.0 - 1j * sqrt_k1 * a_over_w) ** 2
    elif method == "time-domain":
        refl = _time_domain_reflectance(cavity, ensembles, omega_probe, probe_amplitude)
    else:
        raise ConfigError(f"unknown spectrum method {method!r}")

    far = 0.5 * (refl[0] + refl[-1])
    refl = refl / far

    dips = _find_dips(detunings, refl)
    if len(dips) == 2:
        g_eff = float(dips[1] - dips[0])
    else:
        g_eff = 0.0
    gamma_inh = fwhm if fwhm is not None else _inhomogeneous_fwhm(ens)
    regime = classify_regime(g_eff, cavity.kappa, gamma_inh)
    return ReflectionSpectrum(detuning=detunings, reflectance=refl, g_eff=g_eff,
                              regime=regime, method=method, dip_detunings=dips,
                              meta={"normalization": "far-detuned value",
                                    "fwhm": gamma_inh})


def _inhomogeneous_fwhm(ens) -> float:
    """FWHM of the class-weight distribution, from its weighted variance."""
    if len(ens) < 2 or ens.n_spins.sum() == 0:
        return 0.0
    w = ens.n_spins / ens.n_spins.sum()
    mean = float(np.add.reduce(w * ens.omega_a))
    var = float(np.add.reduce(w * (ens.omega_a - mean) ** 2))
    return 2.0 * math.sqrt(2.0 * math.log(2.0) * max(var, 0.0))


def _time_domain_reflectance(cavity: CavityParams, ensembles: list[SubEnsemble],
                             omega_probe: np.ndarray,
                             probe_amplitude: float | None) -> np.ndarray:
    """Steady-state reflectance by direct integration at each probe frequency."""
    ens = pack_ensembles(ensembles)
    cooled = cooled_steady_state(ensembles)
    slowest = min(float(ens.decoherence.min()), cavity.kappa / 2.0)
    t_settle = 12.0 / slowest
    if probe_amplitude is None:
        # spin response saturates once g|a| ~ decoherence; target an amplitude
        # three orders below that so the probe stays linear
        g_pos = ens.g[ens.g > 0]
        a_target = 1.0 if len(g_pos) == 0 else \
            1e-3 * float(ens.decoherence.min()) / (2.0 * float(g_pos.min()))
        probe_amplitude = a_target * 0.5 * cavity.kappa / math.sqrt(cavity.kappa1)
    sqrt_k1 = math.sqrt(cavity.kappa1)
    refl = np.empty(len(omega_probe))
    config = IntegratorConfig(dt_pulse=1e-9, dt_free=1e-9, sample_every=50)
    for i, wd in enumerate(omega_probe):
        drive = DriveParams(omega_d=wd, segments=((0.0, 2.0 * t_settle, probe_amplitude),))
        traj = integrate(cavity, ensembles, drive, cooled.copy(), t_settle, config,
                         track_indices=np.empty(0, dtype=np.intp))
        a_ss = traj.a[-1]
        tail = np.abs(traj.a[-20:])
        residual = float(np.ptp(tail) / max(abs(a_ss), 1e-300))
        if residual > 1e-3:
            raise NumericsError(
                f"time-domain probe at detuning {(wd - cavity.omega_c)/TWO_PI:.3e} Hz "
                f"did not settle (residual {residual:.1e})")
        refl[i] = abs(1.0 - 1j * sqrt_k1 * a_ss / probe_amplitude) ** 2
    return refl


def peak_fwhm(times: np.ndarray, values: np.ndarray, t_peak: float) -> float:
    """Full width at half maximum of the peak nearest t_peak, linearly interpolated."""
    i = int(np.argmin(np.abs(times - t_peak)))
    lo = hi = i
    while lo > 0 and values[lo] < values[lo - 1]:
        lo -= 1
    while hi < len(values) - 1 and values[hi] < values[hi + 1]:
        hi += 1
    i = lo + int(np.argmax(values[lo:hi + 1])) if hi > lo else i
    half = 0.5 * values[i]

    def cross(j, step):
        while 0 < j < len(values) - 1 and values[j] > half:
            j += step
        j0, j1 = (j, j - step) if step < 0 else (j - step, j)
        if values[j1] == values[j0]:
            return times[j]
        frac = (half - values[j0]) / (values[j1] - values[j0])
        return times[j0] + frac * (times[j1] - times[j0])

    return float(cross(i, +1) - cross(i, -1))


def echo_envelope_fwhm(power: PowerTrace, t_peak: float,
                       smooth_window: float = 0.2e-6) -> float:
    """Burst-envelope width of the emission peak nearest t_peak.

    The raw photon trace oscillates at the collective coupling rate inside a
    burst; a moving maximum over smooth_window strips that substructure before
    measuring the half-maximum width.
    """
    t = power.times
    n = power.photon_number
    dt = float(np.median(np.diff(t)))
    half_w = max(1, int(round(0.5 * smooth_window / dt)))
    padded = np.concatenate([np.zeros(half_w), n, np.zeros(half_w)])
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * half_w + 1)
    envelope = windows.max(axis=1)
    return peak_fwhm(t, envelope, t_peak)


@dataclass
class BeatReport:
    """Emission bursts of a freely evolving comb with period 1/spacing."""

    strong_times: np.ndarray        # s, bursts at multiples of the period
    strong_photon_numbers: np.ndarray
    weak_times: np.ndarray          # s, partial-refocusing bursts in between
    weak_photon_numbers: np.ndarray
    period: float
    fwhm_first_strong: float


def detect_beats(power: PowerTrace, period: float, t_skip: float = 0.0) -> BeatReport:
    """Classify emission bursts as full (near n*period) or partial refocusings."""
    t = power.times
    n = power.photon_number
    peaks = []
    for i in range(1, len(n) - 1):
        if n[i] >= n[i - 1] and n[i] > n[i + 1] and t[i] > t_skip:
            t_pk, n_pk = _quadratic_peak(t, n, i)
            peaks.append((t_pk, max(n_pk, n[i])))
    kept: list[tuple[float, float]] = []
    for t_pk, n_pk in sorted(peaks, key=lambda p: -p[1]):
        if all(abs(t_pk - t0) > 0.2 * period for t0, _ in kept):
            kept.append((t_pk, n_pk))
    kept.sort()
    strong, weak = [], []
    for t_pk, n_pk in kept:
        frac = (t_pk / period) % 1.0
        (strong if min(frac, 1.0 - frac) < 0.15 else weak).append((t_pk, n_pk))
    fwhm = math.nan
    for t_pk, _ in strong:
        if t_pk > 0.5 * period:
            fwhm = peak_fwhm(t, n, t_pk)
            break
    return BeatReport(
        strong_times=np.array([p[0] for p in strong]),
        strong_photon_numbers=np.array([p[1] for p in strong]),
        weak_times=np.array([p[0] for p in weak]),
        weak_photon_numbers=np.array([p[1] for p in weak]),
        period=period, fwhm_first_strong=fwhm)


def extract_geff(spectrum: ReflectionSpectrum) -> float:
    """Effective collective coupling: the frequency gap between the two dips.

    Spectra with a single (or unresolved) dip return 0, which classifies as
    weak coupling.
    """
    return spectrum.g_eff


def classify_regime(g_eff: float, kappa: float, fwhm: float) -> str:
    """weak / crossover / strong by comparing g_eff with the loss and the linewidth."""
    if g_eff < 0 or kappa < 0 or fwhm < 0:
        raise ValueError("rates must be non-negative")
    if g_eff == 0.0:
        return "weak"
    lo, hi = (kappa, fwhm) if kappa < fwhm else (fwhm, kappa)
    if g_eff < lo:
        return "weak"
    if g_eff < hi:
        return "crossover"
    return "strong"
