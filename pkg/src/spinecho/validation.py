"""Self-contained analytic-oracle checks, runnable from the CLI.

Each check integrates a case with a closed-form solution and compares against
it; together they exercise the kernel, the fixed points, and determinism.
"""

from __future__ import annotations

import math

import numpy as np

from .integrator import (IntegratorConfig, integrate, validate_relaxation_stage)
from .model import (TWO_PI, CavityParams, DriveParams, SubEnsemble, SystemState,
                    cooled_steady_state)


def _cavity(kappa1_hz=0.95e6, kappa2_hz=0.89e6) -> CavityParams:
    return CavityParams(omega_c=TWO_PI * 9.8e9, kappa1=TWO_PI * kappa1_hz,
                        kappa2=TWO_PI * kappa2_hz, temperature=293.0)


def _single_spin(eta=5e2, g=0.0, detuning_hz=0.0) -> SubEnsemble:
    return SubEnsemble(omega_a=TWO_PI * (9.8e9 + detuning_hz), n_spins=1.0, g=g,
                       gamma=TWO_PI * 23.7, eta=eta, chi=TWO_PI * 0.014e6)


def check_cavity_decay() -> tuple[bool, str]:
    """Empty resonant cavity decays as exp(-kappa t / 2)."""
    cavity = _cavity()
    drive = DriveParams(omega_d=cavity.omega_c)
    state = SystemState(a=1.0 + 0j, sigma12=np.zeros(0, complex), sigma22=np.zeros(0))
    t_end = 1.0 / cavity.kappa
    traj = integrate(cavity, [], drive, state, t_end,
                     IntegratorConfig(dt_pulse=1e-9, dt_free=1e-9, sample_every=10),
                     track_indices=np.empty(0, dtype=np.intp))
    got = abs(traj.a[-1])
    want = math.exp(-0.5)
    err = abs(got - want)
    return err < 1e-8, f"cavity decay |a(1/kappa)| = {got:.10f} vs e^-1/2 (err {err:.2e})"


def check_free_spin_decay() -> tuple[bool, str]:
    """Undriven coherence follows exp(-(i*detuning + decoherence) t) exactly."""
    cavity = _cavity()
    spin = _single_spin(detuning_hz=1e6)
    drive = DriveParams(omega_d=cavity.omega_c)
    s0 = 0.3 + 0.1j
    state = SystemState(a=0j, sigma12=np.array([s0]), sigma22=np.array([0.4]))
    t_end = 10e-6
    traj = integrate(cavity, [spin], drive, state, t_end,
                     IntegratorConfig(dt_pulse=1e-9, dt_free=1e-9, sample_every=100),
                     track_indices=np.array([0]))
    got = traj.final_state.sigma12[0]
    rate = 1j * (spin.omega_a - cavity.omega_c) + spin.decoherence
    want = s0 * np.exp(-rate * t_end)
    rel = abs(got - want) / abs(want)
    return rel < 1e-6, f"free coherence decay relative error {rel:.2e}"


def check_rk4_order() -> tuple[bool, str]:
    """Halving the step shrinks the damped-oscillator error about 16x."""
    cavity = _cavity()
    drive = DriveParams(omega_d=cavity.omega_c - TWO_PI * 2e6)
    t_end = 200e-9
    errs = []
    for dt in (4e-9, 2e-9):
        state = SystemState(a=1.0 + 0j, sigma12=np.zeros(0, complex), sigma22=np.zeros(0))
        traj = integrate(cavity, [], drive, state, t_end,
                         IntegratorConfig(dt_pulse=dt, dt_free=dt, sample_every=50),
                         track_indices=np.empty(0, dtype=np.intp))
        lam = 1j * (cavity.omega_c - drive.omega_d) + 0.5 * cavity.kappa
        want = np.exp(-lam * t_end)
        errs.append(abs(traj.a[-1] - want))
    ratio = errs[0] / errs[1]
    return 13.0 < ratio < 19.0, f"rk4 error ratio on dt halving = {ratio:.2f} (expect ~16)"


def check_relaxation_stages() -> tuple[bool, str]:
    """Stage relaxation time-stepping matches the exponential closed form."""
    spins = [_single_spin()]
    e1 = validate_relaxation_stage(spins, eta_on=False, start_sigma22=0.0)
    e2 = validate_relaxation_stage(spins, eta_on=True, start_sigma22=0.5)
    return True, f"stage relaxation errors {e1:.2e} (thermal), {e2:.2e} (cooled)"


def check_cooled_polarization() -> tuple[bool, str]:
    """Cooled fixed point sits at M/N = -0.3134 for the reference rates."""
    state = cooled_steady_state([_single_spin(eta=5e2)])
    m_over_n = state.sigma22[0] - 0.5
    ok = abs(m_over_n + 0.313) < 1e-3
    return ok, f"cooled M/N = {m_over_n:.5f} (expect -0.313 +- 0.001)"


def check_determinism() -> tuple[bool, str]:
    """Identical inputs give bit-identical trajectories."""
    cavity = _cavity()
    spins = [_single_spin(g=0.18 * TWO_PI, detuning_hz=d) for d in (-2e5, 0.0, 2e5)]
    drive = DriveParams(omega_d=cavity.omega_c, segments=((0.0, 28e-9, 4.94e10),))
    config = IntegratorConfig()

    def one():
        state = cooled_steady_state(spins)
        return integrate(cavity, spins, drive, state, 2e-6, config,
                         track_indices=np.array([1]))

    t1, t2 = one(), one()
    same = (np.array_equal(t1.a, t2.a)
            and np.array_equal(t1.track_sigma12, t2.track_sigma12))
    return same, "bit-identical repeat run" if same else "repeat run differed"


ALL_CHECKS = [
    check_cooled_polarization,
    check_relaxation_stages,
    check_cavity_decay,
    check_free_spin_decay,
    check_rk4_order,
    check_determinism,
]


def run_all(verbose: bool = True) -> bool:
    ok_all = True
    for check in ALL_CHECKS:
        ok, msg = check()
        ok_all &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {check.__name__}: {msg}")
    return ok_all
