"""Parameter and state types plus the mean-field equations of motion.

The model is a single cavity mode coupled to frequency classes ("sub-ensembles")
of identical two-level spins.  All dynamics live in the frame rotating at the
drive frequency omega_d.  Per class alpha the state carries one complex
coherence s12_alpha = <sigma^12> and one real upper-level population
s22_alpha = <sigma^22>; the cavity carries one complex amplitude a = <a_hat>:

    da/dt    = -i(omega_c - omega_d) a - (kappa/2) a - i sqrt(kappa1) W(t)
               - i sum_alpha g_alpha N_alpha s12_alpha
    ds12/dt  = -i(omega_a - omega_d) s12 - (gamma + eta/2 + chi) s12
               - i g a (1 - 2 s22)
    ds22/dt  = gamma - (2 gamma + eta) s22 + i g (conj(a) s12 - a conj(s12))

with W(t) the piecewise-constant drive amplitude.  All angular frequencies and
rates are rad/s except the optical polarization rate eta, which is a plain
rate in 1/s (this convention reproduces the cooled population
s22 = gamma/(2 gamma + eta) = 0.187 for gamma = 2*pi*23.7 Hz, eta = 5e2 1/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar, k as k_B

from .errors import NumericsError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CavityParams:
    """Cavity mode: frequency, port loss kappa1, internal loss kappa2, temperature."""

    omega_c: float          # rad/s
    kappa1: float           # rad/s, coupling (port) loss
    kappa2: float           # rad/s, internal loss
    temperature: float      # K

    def __post_init__(self):
        if self.omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("loss rates must be non-negative")
        if self.kappa1 + self.kappa2 <= 0:
            raise ValueError("total loss kappa1 + kappa2 must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa1 + self.kappa2


@dataclass(frozen=True)
class SubEnsemble:
    """One frequency class of identical spins.

    n_spins is a real weight (fractional after discretizing a continuous
    distribution).  eta is a plain rate in 1/s; all other rates are rad/s.
    """

    omega_a: float          # rad/s, transition frequency
    n_spins: float          # dimensionless weight N_alpha
    g: float                # rad/s, single-spin coupling
    gamma: float            # rad/s, spin-lattice relaxation
    eta: float              # 1/s, optically induced polarization rate
    chi: float              # rad/s, pure dephasing

    def __post_init__(self):
        if self.n_spins < 0:
            raise ValueError("n_spins must be non-negative")
        for name in ("g", "gamma", "eta", "chi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def decoherence(self) -> float:
        """Total transverse decay rate gamma + eta/2 + chi (rad/s)."""
        return self.gamma + self.eta / 2.0 + self.chi

    @property
    def relaxation(self) -> float:
        """Population relaxation rate 2*gamma + eta (rad/s)."""
        return 2.0 * self.gamma + self.eta


@dataclass(frozen=True)
class DriveParams:
    """Rotating-frame drive: frequency plus ordered rectangular segments.

    Each segment is (t_start, t_end, amplitude) with the amplitude in
    s^(-1/2); the squared amplitude is the input photon flux.  The drive is
    zero outside all segments.
    """

    omega_d: float
    segments: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        prev_end = -np.inf
        for seg in self.segments:
            t0, t1, amp = seg
            if t1 <= t0:
                raise ValueError(f"segment {seg} has non-positive duration")
            if t0 < prev_end:
                raise ValueError(f"segment {seg} overlaps its predecessor")
            if amp < 0:
                raise ValueError(f"segment {seg} has negative amplitude")
            prev_end = t1

    def amplitude_at(self, t: float) -> float:
        for t0, t1, amp in self.segments:
            if t0 <= t < t1:
                return amp
        return 0.0


@dataclass
class SystemState:
    """Cavity amplitude plus per-class spin coherences and populations at time t."""

    a: complex
    sigma12: np.ndarray     # complex, one per class
    sigma22: np.ndarray     # real, one per class
    t: float = 0.0

    def __post_init__(self):
        self.sigma12 = np.asarray(self.sigma12, dtype=np.complex128)
        self.sigma22 = np.asarray(self.sigma22, dtype=np.float64)
        if self.sigma12.shape != self.sigma22.shape or self.sigma12.ndim != 1:
            raise ValueError("sigma12 and sigma22 must be 1-d arrays of equal length")

    @property
    def n_classes(self) -> int:
        return len(self.sigma12)

    def copy(self) -> "SystemState":
        return SystemState(self.a, self.sigma12.copy(), self.sigma22.copy(), self.t)

    def bloch_violation(self) -> float:
        """Largest excess of |s12|^2 over s22(1 - s22); <= 0 for physical states."""
        bound = self.sigma22 * (1.0 - self.sigma22)
        excess = np.abs(self.sigma12) ** 2 - bound
        return float(excess.max()) if len(excess) else 0.0


@dataclass
class StateDerivative:
    """Time derivative of a SystemState."""

    da: complex
    dsigma12: np.ndarray
    dsigma22: np.ndarray


@dataclass(frozen=True)
class EnsembleArrays:
    """Struct-of-arrays view of a list of SubEnsembles for vectorized evaluation."""

    omega_a: np.ndarray
    n_spins: np.ndarray
    g: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    chi: np.ndarray
    decoherence: np.ndarray = field(init=False)
    relaxation: np.ndarray = field(init=False)
    g_n: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "decoherence", self.gamma + self.eta / 2.0 + self.chi)
        object.__setattr__(self, "relaxation", 2.0 * self.gamma + self.eta)
        object.__setattr__(self, "g_n", self.g * self.n_spins)

    def __len__(self) -> int:
        return len(self.omega_a)


def pack_ensembles(ensembles: list[SubEnsemble]) -> EnsembleArrays:
    return EnsembleArrays(
        omega_a=np.array([e.omega_a for e in ensembles], dtype=np.float64),
        n_spins=np.array([e.n_spins for e in ensembles], dtype=np.float64),
        g=np.array([e.g for e in ensembles], dtype=np.float64),
        gamma=np.array([e.gamma for e in ensembles], dtype=np.float64),
        eta=np.array([e.eta for e in ensembles], dtype=np.float64),
        chi=np.array([e.chi for e in ensembles], dtype=np.float64),
    )


def rhs(state: SystemState, cavity: CavityParams, ensembles: list[SubEnsemble] | EnsembleArrays,
        drive: DriveParams, t: float | None = None) -> StateDerivative:
    """Right-hand side of the mean-field equations in the drive frame.

    The collective cavity term sums g_alpha N_alpha s12_alpha with numpy's
    pairwise reduction, which is a fixed-tree deterministic order.
    """
    ens = ensembles if isinstance(ensembles, EnsembleArrays) else pack_ensembles(ensembles)
    if state.n_classes != len(ens):
        raise ValueError(
            f"state carries {state.n_classes} classes but ensemble list has {len(ens)}")
    if not np.isfinite(state.a):
        raise NumericsError("non-finite cavity amplitude")
    for name, arr in (("sigma12", state.sigma12), ("sigma22", state.sigma22)):
        finite = np.isfinite(arr)
        if not finite.all():
            raise NumericsError(f"non-finite value in {name} at index {int(np.argmin(finite))}")

    if t is None:
        t = state.t
    a = state.a
    s12 = state.sigma12
    s22 = state.sigma22

    coupling_sum = np.add.reduce(ens.g_n * s12)
    da = (-1j * (cavity.omega_c - drive.omega_d) - 0.5 * cavity.kappa) * a \
        - 1j * np.sqrt(cavity.kappa1) * drive.amplitude_at(t) \
        - 1j * coupling_sum
    ds12 = (-1j * (ens.omega_a - drive.omega_d) - ens.decoherence) * s12 \
        - 1j * ens.g * a * (1.0 - 2.0 * s22)
    ds22 = ens.gamma - ens.relaxation * s22 \
        - 2.0 * ens.g * np.imag(np.conj(a) * s12)
    return StateDerivative(da=complex(da), dsigma12=ds12, dsigma22=ds22)


def thermal_steady_state(ensembles: list[SubEnsemble], eta_off: bool = True) -> SystemState:
    """Fixed point with the drive off.

    With the optical pumping also off (eta_off, the thermal stage) every
    population relaxes to gamma/(2*gamma) = 1/2; otherwise this equals the
    cooled steady state.
    """
    if not eta_off:
        return cooled_steady_state(ensembles)
    n = len(ensembles)
    return SystemState(a=0j, sigma12=np.zeros(n, dtype=np.complex128),
                       sigma22=np.full(n, 0.5), t=0.0)


def cooled_steady_state(ensembles: list[SubEnsemble]) -> SystemState:
    """Fixed point under optical pumping: a = 0, s12 = 0, s22 = gamma/(2*gamma + eta)."""
    s22 = np.array([e.gamma / (2.0 * e.gamma + e.eta) if (e.gamma or e.eta) else 0.5
                    for e in ensembles], dtype=np.float64)
    n = len(ensembles)
    return SystemState(a=0j, sigma12=np.zeros(n, dtype=np.complex128), sigma22=s22, t=0.0)


def thermal_photon_number(cavity: CavityParams) -> float:
    """Planck occupation of the cavity mode, 1/(exp(hbar w / kT) - 1)."""
    x = hbar * cavity.omega_c / (k_B * cavity.temperature)
    return 1.0 / np.expm1(x)
