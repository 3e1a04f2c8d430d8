"""Structural features of the bulk-sample echo run (shares the session fixture)."""

import numpy as np

from spinecho import PowerTrace, detect_echoes, extract_grating, pack_ensembles
from spinecho.model import TWO_PI


def _smoothed(profile, half_width=16):
    kernel = np.ones(2 * half_width + 1) / (2 * half_width + 1)
    return np.convolve(profile, kernel, mode="same")


def _dominant_maxima(det_hz, profile, half_width=16):
    sm = _smoothed(profile, half_width)
    lo, hi = sm.min(), sm.max()
    out = []
    for i in range(half_width, len(sm) - half_width):
        window = sm[i - half_width:i + half_width + 1]
        if sm[i] == window.max() and sm[i] > lo + 0.3 * (hi - lo):
            if out and det_hz[i] - out[-1] < 0.1e6:
                continue
            out.append(det_hz[i])
    return out


def test_post_cooling_profile_is_flat(fig2_run):
    mat, traj = fig2_run
    prof = traj.snapshots["post-cooling"].sigma22 - 0.5
    assert np.max(np.abs(prof + 0.31335)) < 1e-5


def test_pulse_barely_excites_the_spins(fig2_run):
    # during the first pulse the cavity is loaded but the ensemble is not
    mat, traj = fig2_run
    mid1 = traj.snapshots["mid-pulse-1"].sigma22 - 0.5
    assert np.max(np.abs(mid1 + 0.31335)) < 5e-3
    i_pulse = np.searchsorted(traj.times, 0.5 * mat.sequence.t_pi2)
    assert np.abs(traj.a[i_pulse]) ** 2 > 1e10


def test_free_evolution_builds_double_peak(fig2_run):
    mat, traj = fig2_run
    ens = pack_ensembles(mat.ensembles)
    det_hz = (ens.omega_a - mat.cavity.omega_c) / TWO_PI
    prof = traj.snapshots["end-free-evolution"].sigma22 - 0.5
    peaks = _dominant_maxima(det_hz, prof)
    assert len(peaks) == 2
    assert abs(peaks[0] + peaks[1]) < 0.1e6        # symmetric about resonance
    assert 0.5e6 < peaks[1] < 3e6


def test_second_pulse_writes_rapid_grating(fig2_run):
    mat, traj = fig2_run
    ens = pack_ensembles(mat.ensembles)
    det_hz = (ens.omega_a - mat.cavity.omega_c) / TWO_PI
    for name in ("mid-pulse-2", "end-pulse-2"):
        prof = traj.snapshots[name].sigma22 - 0.5
        residue = prof - _smoothed(prof)
        central = np.abs(det_hz) <= 1e6
        crossings = np.count_nonzero(np.diff(np.signbit(residue[central])))
        assert crossings >= 30, name
    grating = extract_grating((det_hz, traj.snapshots["end-pulse-2"].sigma22 - 0.5),
                              window_hz=mat.analysis.window_hz)
    assert abs(grating.f_hz - 0.1e6) < 0.01e6
    assert grating.amplitude > 0.01
    assert not grating.low_confidence


def test_echo_train_decays_below_the_floor(fig2_run):
    mat, traj = fig2_run
    trace = PowerTrace.from_trajectory(traj, mat.cavity)
    rep = detect_echoes(trace, mat.sequence)
    assert np.all(np.diff(rep.peak_powers_dbm) < 0)
    assert rep.n_visible < len(rep.peak_times)     # late echoes sink below the floor
    assert rep.peak_powers_dbm[0] > rep.noise_floor_dbm + 60
