"""Derived quantities: photon number, output power, Bloch vectors, Dicke numbers.

Output power leaves through the coupling port only, P = hbar*omega_c*kappa1*n;
the thermal floor is the same conversion applied to the Planck occupation and
is plotted as a constant line, never added to the coherent signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .integrator import Trajectory
from .model import TWO_PI, CavityParams, SystemState, thermal_photon_number


def photon_number(a: complex | np.ndarray):
    """Intra-cavity photon number |<a>|^2 of the coherent amplitude."""
    return np.abs(a) ** 2


def output_power_watt(n: float | np.ndarray, omega_c: float, kappa1: float):
    return hbar * omega_c * kappa1 * np.asarray(n, dtype=float)


def output_power_dbm(n: float | np.ndarray, omega_c: float, kappa1: float):
    """Emitted power in dBm; n = 0 maps to -inf."""
    p_watt = output_power_watt(n, omega_c, kappa1)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p_watt / 1e-3)
    return out if out.ndim else float(out)


def noise_floor_dbm(cavity: CavityParams) -> float:
    """Output power of the thermal photon occupation, the detectability line."""
    return float(output_power_dbm(thermal_photon_number(cavity), cavity.omega_c, cavity.kappa1))


@dataclass
class PowerTrace:
    """Time series of photon number and emitted power for one trajectory."""

    times: np.ndarray
    photon_number: np.ndarray
    power_dbm: np.ndarray
    noise_floor_dbm: float

    @classmethod
    def from_trajectory(cls, traj: Trajectory, cavity: CavityParams) -> "PowerTrace":
        n = photon_number(traj.a)
        return cls(times=traj.times.copy(), photon_number=n,
                   power_dbm=output_power_dbm(n, cavity.omega_c, cavity.kappa1),
                   noise_floor_dbm=noise_floor_dbm(cavity))


def bloch_components(sigma12, sigma22, n_spins):
    """Collective Bloch vector (Jx, Jy, Jz) of a class of n_spins identical spins."""
    sigma12 = np.asarray(sigma12)
    jx = n_spins * sigma12.real
    jy = -n_spins * sigma12.imag
    jz = n_spins * (np.asarray(sigma22) - 0.5)
    return jx, jy, jz


def dicke_numbers(jx, jy, jz):
    """Mean Dicke quantum numbers: J_bar = |J|, M_bar = Jz (first-order closure)."""
    j_bar = np.sqrt(np.asarray(jx) ** 2 + np.asarray(jy) ** 2 + np.asarray(jz) ** 2)
    return j_bar, jz


@dataclass
class BlochRecord:
    """Per-class Bloch vectors and Dicke numbers for one state."""

    detuning_hz: np.ndarray     # (omega_a - omega_c)/2pi
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    j_bar: np.ndarray
    m_bar: np.ndarray
    n_spins: np.ndarray
    t: float

    @classmethod
    def from_state(cls, state: SystemState, omega_a: np.ndarray, n_spins: np.ndarray,
                   omega_c: float) -> "BlochRecord":
        jx, jy, jz = bloch_components(state.sigma12, state.sigma22, n_spins)
        j_bar, m_bar = dicke_numbers(jx, jy, jz)
        return cls(detuning_hz=(omega_a - omega_c) / TWO_PI, jx=jx, jy=jy, jz=jz,
                   j_bar=j_bar, m_bar=m_bar, n_spins=n_spins, t=state.t)


def snapshot_excitation_profile(traj: Trajectory, t: float, omega_a: np.ndarray,
                                omega_c: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-class M_bar/N at the snapshot nearest t, versus detuning in Hz.

    Uses the stored full-state snapshots; t must fall within the trajectory.
    """
    if not traj.times[0] <= t <= traj.times[-1]:
        raise ValueError(f"t = {t:.3e} s outside trajectory "
                         f"[{traj.times[0]:.3e}, {traj.times[-1]:.3e}]")
    _, snap = traj.snapshot_nearest(t)
    detuning_hz = (omega_a - omega_c) / TWO_PI
    m_over_n = snap.sigma22 - 0.5
    return detuning_hz, m_over_n
