"""End-to-end acceptance criteria.

Each test prints one PASS line (visible with pytest -s); a failed assertion is
the corresponding FAIL.  The heavy bulk-sample trajectory is computed once per
session.
"""

import math
import tempfile

import numpy as np
import pytest

from spinecho import (PowerTrace, cooled_steady_state, detect_echoes, extract_geff,
                      extract_grating, fit_f_tau, get_scenario, jx_grating_period,
                      materialize, pack_ensembles, reflection_spectrum, run_protocol,
                      run_scenario, run_sweep)
from spinecho.analysis import peak_fwhm
from spinecho.integrator import IntegratorConfig, integrate
from spinecho.model import TWO_PI, DriveParams, SubEnsemble, SystemState

pytestmark = pytest.mark.acceptance


def report(name: str, detail: str):
    print(f"\nACCEPTANCE PASS {name}: {detail}")


@pytest.fixture(scope="session")
def fig2_echo_report(fig2_run):
    mat, traj = fig2_run
    trace = PowerTrace.from_trajectory(traj, mat.cavity)
    return mat, traj, trace, detect_echoes(trace, mat.sequence)


def test_a01_cooling_fixed_point():
    """Cooled population at gamma = 2*pi*23.7, eta = 5e2 gives M/N = -0.313 +- 0.001."""
    spins = [SubEnsemble(omega_a=TWO_PI * 9.8e9, n_spins=1.0, g=0.0,
                         gamma=TWO_PI * 23.7, eta=5e2, chi=0.0)]
    state = cooled_steady_state(spins)
    m_over_n = state.sigma22[0] - 0.5
    assert m_over_n == pytest.approx(-0.313, abs=1e-3)
    report("A01 cooling fixed point", f"M/N = {m_over_n:+.5f}")


def test_a02_free_decay_oracle():
    """Undriven coherence matches its closed form to < 1e-6 relative over 10 us."""
    from spinecho.model import CavityParams
    cavity = CavityParams(TWO_PI * 9.8e9, TWO_PI * 0.95e6, TWO_PI * 0.89e6, 293.0)
    spin = SubEnsemble(omega_a=TWO_PI * (9.8e9 + 0.7e6), n_spins=1.0, g=0.0,
                       gamma=TWO_PI * 23.7, eta=5e2, chi=TWO_PI * 0.014e6)
    s0 = 0.3 - 0.1j
    state = SystemState(a=0j, sigma12=np.array([s0]), sigma22=np.array([0.4]))
    traj = integrate(cavity, [spin], DriveParams(omega_d=cavity.omega_c), state, 10e-6,
                     IntegratorConfig(), track_indices=np.array([0]))
    got = traj.final_state.sigma12[0]
    rate = 1j * (spin.omega_a - cavity.omega_c) + spin.decoherence
    want = s0 * np.exp(-rate * 10e-6)
    rel = abs(got - want) / abs(want)
    assert rel < 1e-6
    report("A02 free-decay oracle", f"relative error {rel:.2e}")


def test_a03_rabi_splitting():
    """Split dips 2*pi*(3.0 +- 0.3) MHz; half-splitting near g*sqrt(N_total)."""
    mat = materialize(get_scenario("spectrum-main"))
    spec = reflection_spectrum(mat.cavity, mat.ensembles,
                               span=TWO_PI * mat.analysis.spectrum_span_hz,
                               resolution=TWO_PI * mat.analysis.spectrum_resolution_hz)
    gap_hz = extract_geff(spec) / TWO_PI
    assert 2.7e6 <= gap_hz <= 3.3e6
    g = mat.ensembles[0].g
    n_total = sum(e.n_spins for e in mat.ensembles)
    g_sqrt_n = g * math.sqrt(n_total)
    assert g_sqrt_n == pytest.approx(TWO_PI * 1.54e6, rel=0.01)
    assert abs(TWO_PI * gap_hz / 2.0 - g_sqrt_n) / g_sqrt_n < 0.10
    report("A03 Rabi splitting", f"dip gap {gap_hz/1e6:.3f} MHz, "
           f"half/gsqrtN = {TWO_PI*gap_hz/2/g_sqrt_n:.3f}")


def test_a04_echo_train(fig2_echo_report):
    """>= 3 echoes above the thermal floor at n*tau (center-to-center) +- 2%."""
    mat, traj, trace, rep = fig2_echo_report
    seq = mat.sequence
    assert rep.n_visible >= 3
    assert np.all(rep.visible[:3])
    for k in range(3):
        expected = (k + 1) * seq.tau_eff
        assert abs(rep.peak_times[k] - expected) <= 0.02 * expected
    assert rep.period_estimate == pytest.approx(seq.tau_eff, rel=0.02)
    above = rep.peak_powers_dbm[:3] - rep.noise_floor_dbm
    report("A04 echo train", f"{rep.n_visible} visible echoes at "
           f"{[f'{t*1e6:.2f}us' for t in rep.peak_times[:3]]}, "
           f"{[f'+{x:.0f}dB' for x in above]} above floor")


def test_a05_grating_law():
    """1/f versus tau fits a line of slope 1 +- 5% through the origin."""
    taus = [5e-6, 10e-6, 15e-6, 20e-6]
    fs = []
    for tau in taus:
        cfg = get_scenario("fig2-echoes")
        cfg.sequence.tau_s = tau
        cfg.sequence.t_total_s = 0.5e-6
        mat = materialize(cfg)
        traj = run_protocol(mat.cavity, mat.ensembles, mat.sequence, mat.integrator)
        ens = pack_ensembles(mat.ensembles)
        det_hz = (ens.omega_a - mat.cavity.omega_c) / TWO_PI
        snap = traj.snapshots["end-pulse-2"]
        grating = extract_grating((det_hz, snap.sigma22 - 0.5),
                                  mat.analysis.window_hz)
        assert not grating.low_confidence
        fs.append(grating.f_hz)
    slope, intercept = fit_f_tau(np.array(taus), np.array(fs))
    assert slope == pytest.approx(1.0, abs=0.05)
    assert abs(intercept) < 1e-6
    f10 = fs[taus.index(10e-6)]
    assert f10 == pytest.approx(0.1e6, rel=0.10)
    report("A05 grating law", f"slope {slope:.4f}, intercept {intercept*1e9:.1f} ns, "
           f"f(tau=10us) = {f10/1e6:.4f} MHz")


def test_a06_jx_grating_periods(fig2_run):
    """Jx grating spans ~0.1 MHz at the first echo and ~0.05 MHz at the second."""
    mat, traj = fig2_run
    ens = pack_ensembles(mat.ensembles)
    results = {}
    for name, expected in (("first-echo", 0.1e6), ("second-echo", 0.05e6)):
        snap = traj.snapshots[name]
        grating = jx_grating_period(snap, ens.omega_a, ens.n_spins, mat.cavity.omega_c,
                                    window_hz=mat.analysis.window_hz)
        assert grating.f_hz == pytest.approx(expected, rel=0.15)
        results[name] = grating.f_hz
    report("A06 Jx grating periods",
           f"{results['first-echo']/1e6:.4f} / {results['second-echo']/1e6:.4f} MHz")


@pytest.fixture(scope="session")
def sweep_tables():
    out = {}
    for name in ("fig3-power-sweep", "fig3-detuning-sweep", "fig3-eta-sweep"):
        with tempfile.TemporaryDirectory() as td:
            out[name] = run_sweep(get_scenario(name), td)["rows"]
    return out


def test_a07_sweep_trends(sweep_tables):
    """Echo powers monotone in drive power; detuning curve peaked at resonance;
    cooling-rate dependence rises, plateaus between 4e2 and 2e4, then falls."""
    power = sweep_tables["fig3-power-sweep"]
    for k in (1, 2, 3):
        vals = [r[f"echo{k}_dbm"] for r in power]
        finite = [(a, b) for a, b in zip(vals, vals[1:]) if math.isfinite(a)]
        assert all(b > a for a, b in finite), f"echo{k} not monotone in power"
    by_power = {r["power_dbm"]: r for r in power}
    assert not by_power[2.0]["echo2_visible"] and by_power[4.0]["echo2_visible"]
    assert not by_power[8.0]["echo3_visible"] and by_power[10.0]["echo3_visible"]
    assert all(b["grating_r"] > a["grating_r"] for a, b in zip(power, power[1:]))

    det = sweep_tables["fig3-detuning-sweep"]
    d = np.array([r["detuning_hz"] for r in det])
    p1 = np.array([r["echo1_dbm"] for r in det])
    i0 = int(np.argmin(np.abs(d)))
    assert int(np.argmax(p1)) == i0
    assert np.all(np.diff(p1[i0:]) < 0) and np.all(np.diff(p1[:i0 + 1]) > 0)

    eta_rows = sweep_tables["fig3-eta-sweep"]
    p = {r["eta_per_s"]: r["echo1_dbm"] for r in eta_rows}
    assert p[0.1] < p[10.0] < p[100.0] < p[400.0]
    plateau = [p[400.0], p[2000.0], p[10000.0], p[20000.0]]
    assert max(plateau) - min(plateau) < 6.0
    assert p[1e5] < p[2e4] - 3.0
    assert p[1e5] < min(plateau)
    report("A07 sweep trends",
           f"echo2/3 appear above {2.0}-{4.0} / {8.0}-{10.0} dBm; detuning peak on "
           f"resonance; eta plateau spread {max(plateau)-min(plateau):.1f} dB")


def test_a08_regime_classification():
    """eta = 2e2 / 4e2 / 2e4 classify weak / crossover / strong; g_eff saturates."""
    base = get_scenario("figS7-regimes")
    regimes = {}
    gaps = []
    for eta in base.values:
        cfg = base.point(eta)
        mat = materialize(cfg)
        spec = reflection_spectrum(mat.cavity, mat.ensembles,
                                   span=TWO_PI * mat.analysis.spectrum_span_hz,
                                   resolution=TWO_PI * mat.analysis.spectrum_resolution_hz)
        regimes[eta] = spec.regime
        gaps.append(extract_geff(spec))
    assert regimes[2e2] == "weak"
    assert regimes[4e2] == "crossover"
    assert regimes[2e4] == "strong"
    assert all(b >= a - TWO_PI * 0.02e6 for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] <= gaps[-2] * 1.05
    report("A08 regime classification",
           f"{ {k: regimes[k] for k in (2e2, 4e2, 2e4)} }, "
           f"g_eff {gaps[0]/TWO_PI/1e6:.2f} -> {gaps[-1]/TWO_PI/1e6:.2f} MHz")


def test_a09_superradiant_beats():
    """Beat bursts at multiples of tau, weaker partial refocusings in between,
    and strictly narrower bursts as the comb gains classes."""
    tau = 10e-6
    fwhms = {}
    for n in (3, 5, 99):
        with tempfile.TemporaryDirectory() as td:
            res = run_scenario(get_scenario(f"fig4-beats-{n}"), td)
        beats = res["report"]["beats"]
        strong_t = np.asarray(beats["strong_times_s"])
        strong_n = np.asarray(beats["strong_photon_numbers"])
        late = strong_t > 0.5 * tau
        assert late.sum() >= 3, f"{n}-class comb lost its bursts"
        for m in (1, 2, 3):
            assert np.any(np.abs(strong_t - m * tau) < 0.15 * tau), \
                f"{n}-class comb missing burst at {m}*tau"
        if n == 3:
            weak_n = np.asarray(beats["weak_photon_numbers"])
            assert len(weak_n) >= 2
            assert weak_n.max() < strong_n[late].max()
        fwhms[n] = beats["fwhm_first_strong_s"]
    assert fwhms[3] > fwhms[5] > fwhms[99]
    report("A09 superradiant beats",
           f"FWHM {fwhms[3]*1e6:.2f} > {fwhms[5]*1e6:.2f} > {fwhms[99]*1e6:.2f} us")


def test_a10_strong_coupling_scenario(fig2_echo_report):
    """Strong system: 12 MHz dip splitting and sharper echo bursts than fig2."""
    mat2, _, trace2, rep2 = fig2_echo_report
    fig2_fwhm = peak_fwhm(trace2.times, trace2.photon_number,
                          mat2.sequence.pi_center + rep2.peak_times[0])

    cfg = get_scenario("figS6-strong")
    mat = materialize(cfg)
    spec = reflection_spectrum(mat.cavity, mat.ensembles,
                               span=TWO_PI * mat.analysis.spectrum_span_hz,
                               resolution=TWO_PI * mat.analysis.spectrum_resolution_hz)
    gap_hz = extract_geff(spec) / TWO_PI
    assert gap_hz == pytest.approx(12e6, rel=0.10)

    traj = run_protocol(mat.cavity, mat.ensembles, mat.sequence, mat.integrator)
    trace = PowerTrace.from_trajectory(traj, mat.cavity)
    rep = detect_echoes(trace, mat.sequence)
    assert rep.n_visible >= 3
    strong_fwhm = peak_fwhm(trace.times, trace.photon_number,
                            mat.sequence.pi_center + rep.peak_times[0])
    assert strong_fwhm < fig2_fwhm
    assert traj.bloch_violation_max <= 1e-9
    report("A10 strong coupling", f"splitting {gap_hz/1e6:.2f} MHz, echo FWHM "
           f"{strong_fwhm*1e9:.0f} ns < {fig2_fwhm*1e9:.0f} ns (bulk sample)")


def test_a11_numerics(fig2_run):
    """Halving both steps moves the photon trace by < 1e-3 relative L-inf;
    the Bloch-sphere bound is never exceeded beyond 1e-9."""
    mat, traj = fig2_run
    halved = run_protocol(mat.cavity, mat.ensembles, mat.sequence,
                          mat.integrator.halved())
    assert np.array_equal(traj.times, halved.times)
    n1 = np.abs(traj.a) ** 2
    n2 = np.abs(halved.a) ** 2
    rel = float(np.max(np.abs(n1 - n2)) / np.max(n1))
    assert rel < 1e-3
    assert traj.bloch_violation_max <= 1e-9
    assert halved.bloch_violation_max <= 1e-9
    report("A11 numerics", f"dt-halving L-inf {rel:.2e}, Bloch excess "
           f"{max(traj.bloch_violation_max, halved.bloch_violation_max):.1e}")
