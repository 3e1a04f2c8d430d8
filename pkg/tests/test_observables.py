import math

import numpy as np
import pytest

from spinecho import (CavityParams, DriveParams, IntegratorConfig, SubEnsemble, SystemState,
                      bloch_components, dicke_numbers, integrate, noise_floor_dbm,
                      output_power_dbm, photon_number, snapshot_excitation_profile,
                      thermal_photon_number)
from spinecho.observables import BlochRecord, PowerTrace

TWO_PI = 2.0 * np.pi


def cavity():
    return CavityParams(omega_c=TWO_PI * 9.8e9, kappa1=TWO_PI * 0.95e6,
                        kappa2=TWO_PI * 0.89e6, temperature=293.0)


class TestPhotonNumber:
    def test_trivial_values(self):
        assert photon_number(0j) == 0.0
        assert photon_number(3 + 4j) == pytest.approx(25.0, rel=1e-14)

    def test_driven_cavity_fixed_point(self):
        # steady state of the driven empty cavity: n = 4 kappa1 W^2 / kappa^2
        c = cavity()
        w = 1e3
        drive = DriveParams(omega_d=c.omega_c, segments=((0.0, 1.0, w),))
        state = SystemState(a=0j, sigma12=np.zeros(0, complex), sigma22=np.zeros(0))
        traj = integrate(c, [], drive, state, 35.0 / c.kappa,
                         IntegratorConfig(dt_pulse=1e-9, dt_free=1e-9, sample_every=100))
        expected = 4.0 * c.kappa1 * w**2 / c.kappa**2
        assert photon_number(traj.a[-1]) == pytest.approx(expected, rel=1e-5)


class TestOutputPower:
    def test_thermal_floor_power(self):
        c = cavity()
        n_th = thermal_photon_number(c)
        dbm = output_power_dbm(n_th, c.omega_c, c.kappa1)
        assert dbm == pytest.approx(-106.17, abs=0.05)
        assert noise_floor_dbm(c) == pytest.approx(dbm, rel=1e-12)

    def test_zero_photons_is_minus_infinity(self):
        c = cavity()
        assert output_power_dbm(0.0, c.omega_c, c.kappa1) == -math.inf

    def test_doubling_adds_3db(self):
        c = cavity()
        base = output_power_dbm(100.0, c.omega_c, c.kappa1)
        assert output_power_dbm(200.0, c.omega_c, c.kappa1) - base == pytest.approx(
            3.0103, abs=1e-4)

    def test_strictly_monotone_in_photon_number(self):
        c = cavity()
        n = np.logspace(-3, 10, 40)
        dbm = output_power_dbm(n, c.omega_c, c.kappa1)
        assert np.all(np.diff(dbm) > 0)


class TestBlochComponents:
    def test_minus_x_state(self):
        jx, jy, jz = bloch_components(-0.5 + 0j, 0.5, 100.0)
        assert (jx, jy, jz) == (-50.0, 0.0, 0.0)

    def test_ground_state(self):
        jx, jy, jz = bloch_components(0j, 0.0, 100.0)
        assert (jx, jy, jz) == (0.0, 0.0, -50.0)

    def test_imaginary_coherence_maps_to_minus_y(self):
        jx, jy, jz = bloch_components(0.5j, 0.5, 2.0)
        assert (jx, jy, jz) == (0.0, -1.0, 0.0)


class TestDickeNumbers:
    def test_cooled_boundary_state(self):
        jx, jy, jz = bloch_components(0j, 0.186648, 1.0)
        j_bar, m_bar = dicke_numbers(jx, jy, jz)
        assert j_bar == pytest.approx(0.31335, abs=1e-5)
        assert m_bar == pytest.approx(-0.31335, abs=1e-5)

    def test_fully_inverted(self):
        j_bar, m_bar = dicke_numbers(*bloch_components(0j, 1.0, 1.0))
        assert j_bar == m_bar == 0.5

    def test_equatorial(self):
        j_bar, m_bar = dicke_numbers(*bloch_components(0.5 + 0j, 0.5, 1.0))
        assert j_bar == pytest.approx(0.5)
        assert m_bar == 0.0

    def test_m_bounded_by_j_for_physical_states(self):
        rng = np.random.default_rng(42)
        s22 = rng.uniform(0.0, 1.0, 500)
        radius = np.sqrt(s22 * (1.0 - s22)) * rng.uniform(0.0, 1.0, 500)
        phase = rng.uniform(0, TWO_PI, 500)
        s12 = radius * np.exp(1j * phase)
        n = rng.uniform(1.0, 1e12, 500)
        j_bar, m_bar = dicke_numbers(*bloch_components(s12, s22, n))
        assert np.all(np.abs(m_bar) <= j_bar + 1e-9)
        assert np.all(j_bar <= n / 2 + 1e-9)


class TestCollectiveDecay:
    def test_pure_dephasing_shrinks_j_exponentially(self):
        # chi-only equatorial ensemble: J(t)/J(0) = exp(-chi t) exactly
        c = cavity()
        chi = TWO_PI * 0.05e6
        spins = [SubEnsemble(omega_a=c.omega_c, n_spins=5.0, g=0.0, gamma=0.0,
                             eta=0.0, chi=chi)]
        state = SystemState(a=0j, sigma12=np.array([0.5 + 0j]), sigma22=np.array([0.5]))
        t_end = 5e-6
        traj = integrate(c, spins, DriveParams(omega_d=c.omega_c), state, t_end,
                         IntegratorConfig(), track_indices=np.array([0]))
        s = traj.final_state
        j0 = dicke_numbers(*bloch_components(0.5 + 0j, 0.5, 5.0))[0]
        j1 = dicke_numbers(*bloch_components(s.sigma12[0], s.sigma22[0], 5.0))[0]
        assert s.sigma22[0] == 0.5
        assert j1 / j0 == pytest.approx(math.exp(-chi * t_end), rel=1e-9)


class TestProfilesAndRecords:
    def run_small(self):
        from spinecho import HahnSequence, run_protocol
        c = cavity()
        spins = [SubEnsemble(omega_a=c.omega_c + TWO_PI * d, n_spins=10.0, g=TWO_PI * 0.18,
                             gamma=TWO_PI * 23.7, eta=5e2, chi=TWO_PI * 0.014e6)
                 for d in (-0.2e6, 0.0, 0.2e6)]
        seq = HahnSequence(t_pi2=28e-9, tau=2e-6, omega_d=c.omega_c, power_dbm=12.0,
                           t_total=2e-6)
        return c, spins, run_protocol(c, spins, seq, IntegratorConfig())

    def test_post_cooling_profile_is_flat(self):
        c, spins, traj = self.run_small()
        omega_a = np.array([s.omega_a for s in spins])
        det, m_over_n = snapshot_excitation_profile(traj, 0.0, omega_a, c.omega_c)
        np.testing.assert_allclose(det, [-0.2e6, 0.0, 0.2e6], atol=1e-6)
        np.testing.assert_allclose(m_over_n, -0.31335, atol=1e-5)

    def test_profile_requires_time_inside_trajectory(self):
        c, spins, traj = self.run_small()
        omega_a = np.array([s.omega_a for s in spins])
        with pytest.raises(ValueError, match="outside"):
            snapshot_excitation_profile(traj, 1.0, omega_a, c.omega_c)

    def test_bloch_record_consistency(self):
        c, spins, traj = self.run_small()
        snap = traj.snapshots["end-pulse-2"]
        omega_a = np.array([s.omega_a for s in spins])
        n_spins = np.array([s.n_spins for s in spins])
        rec = BlochRecord.from_state(snap, omega_a, n_spins, c.omega_c)
        assert np.all(np.abs(rec.m_bar) <= rec.j_bar + 1e-9)
        np.testing.assert_allclose(rec.j_bar, np.sqrt(rec.jx**2 + rec.jy**2 + rec.jz**2))
        assert rec.t == pytest.approx(snap.t)

    def test_power_trace_finite_where_photons_present(self):
        c, spins, traj = self.run_small()
        trace = PowerTrace.from_trajectory(traj, c)
        present = trace.photon_number > 0
        assert np.all(np.isfinite(trace.power_dbm[present]))
        assert np.all(trace.photon_number >= 0)
