"""Fixed-step RK4 integration and the three-stage measurement protocol.

Stage 1 (thermal equilibrium) and stage 2 (optical cooling) are closed-form
fixed points of the equations of motion; stage 3 integrates the two-pulse
drive sequence and the free evolution that follows.

The integrator walks a precomputed list of breakpoints (sample ticks, drive
segment edges, snapshot times).  Each interval is integrated by the compiled
kernel with a constant step.  The step never exceeds the configured
dt_pulse/dt_free; it is refined further (halved as needed) whenever the
instantaneous rotation rate, dominated by 2*g*|a| during strong pulses, would
otherwise exceed THETA_MAX radians per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from . import _kernel
from .errors import ConfigError, NumericsError
from .model import (CavityParams, DriveParams, EnsembleArrays, StateDerivative, SubEnsemble,
                    SystemState, cooled_steady_state, pack_ensembles)

THETA_MAX = 0.1         # target max phase advance per step, rad
RATE_SAFETY = 1.5       # margin on the amplitude-dependent rate estimate
GUARD_LIMIT = 0.3       # hard accuracy guard on dt_free * max detuning, rad
BLOCH_TOL = 1e-9        # allowed excess over the Bloch-sphere bound
MAX_SUBSTEPS = 5_000_000


def omega_from_power(power_dbm: float, omega_d: float) -> float:
    """Drive amplitude in s^(-1/2) whose square is the input photon flux."""
    if power_dbm == -np.inf:
        return 0.0
    power_w = 1e-3 * 10.0 ** (power_dbm / 10.0)
    return math.sqrt(power_w / (hbar * omega_d))


@dataclass(frozen=True)
class HahnSequence:
    """Two rectangular pulses separated by a free-evolution gap tau.

    t_total is the horizon after the second pulse ends; at least 3*tau is
    needed to see a useful echo train.
    """

    t_pi2: float            # s, first pulse duration
    tau: float              # s, gap between pulse end and next pulse start
    omega_d: float          # rad/s
    power_dbm: float
    t_pi: float = 0.0       # s, second pulse duration; defaults to 2*t_pi2
    t_total: float = 0.0    # s, horizon after second pulse; defaults to 8*tau

    def __post_init__(self):
        if self.t_pi == 0.0:
            object.__setattr__(self, "t_pi", 2.0 * self.t_pi2)
        if self.t_total == 0.0:
            object.__setattr__(self, "t_total", 8.0 * self.tau)
        if self.t_pi2 <= 0 or self.t_pi <= 0:
            raise ValueError("pulse durations must be positive")
        if self.tau <= self.t_pi:
            raise ValueError("tau must exceed the second pulse duration")

    @property
    def amplitude(self) -> float:
        return omega_from_power(self.power_dbm, self.omega_d)

    @property
    def pulse2_start(self) -> float:
        return self.t_pi2 + self.tau

    @property
    def pulse2_end(self) -> float:
        return self.pulse2_start + self.t_pi

    @property
    def pi_center(self) -> float:
        """Temporal center of the second pulse, the echo-time reference."""
        return self.pulse2_start + 0.5 * self.t_pi

    @property
    def tau_eff(self) -> float:
        """Center-to-center pulse delay; echoes recur at multiples of this."""
        return self.tau + 0.5 * (self.t_pi2 + self.t_pi)

    @property
    def t_end(self) -> float:
        return self.pulse2_end + self.t_total

    def drive(self) -> DriveParams:
        amp = self.amplitude
        return DriveParams(omega_d=self.omega_d, segments=(
            (0.0, self.t_pi2, amp),
            (self.pulse2_start, self.pulse2_end, amp),
        ))

    def snapshot_events(self) -> dict[str, float]:
        """Named protocol instants used for full-state snapshots."""
        return {
            "post-cooling": 0.0,
            "mid-pulse-1": 0.5 * self.t_pi2,
            "mid-free-evolution": self.t_pi2 + 0.5 * self.tau,
            "end-free-evolution": self.pulse2_start,
            "mid-pulse-2": self.pi_center,
            "end-pulse-2": self.pulse2_end,
            "first-echo": self.pi_center + self.tau_eff,
        }


@dataclass(frozen=True)
class IntegratorConfig:
    """Step sizes and output decimation.

    sample_every counts dt_free units between trajectory samples, so the
    default (0.1 ns, 1 ns, 10) samples the cavity every 10 ns.
    """

    dt_pulse: float = 0.1e-9
    dt_free: float = 1e-9
    sample_every: int = 10

    def __post_init__(self):
        if self.dt_pulse <= 0 or self.dt_free <= 0:
            raise ValueError("step sizes must be positive")
        if self.dt_pulse > self.dt_free:
            raise ValueError("dt_pulse must not exceed dt_free")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def sample_dt(self) -> float:
        return self.sample_every * self.dt_free

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.dt_pulse / 2, self.dt_free / 2, self.sample_every * 2)


@dataclass
class Trajectory:
    """Sampled observables of one integration run."""

    times: np.ndarray
    a: np.ndarray
    track_indices: np.ndarray
    track_sigma12: np.ndarray       # (n_samples, n_tracked)
    track_sigma22: np.ndarray
    snapshots: dict[str, SystemState]
    final_state: SystemState
    stage_markers: list[tuple[str, float]]
    bloch_violation_max: float
    n_steps: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")

    def snapshot_nearest(self, t: float) -> tuple[str, SystemState]:
        if not self.snapshots:
            raise ValueError("trajectory carries no snapshots")
        name = min(self.snapshots, key=lambda k: abs(self.snapshots[k].t - t))
        return name, self.snapshots[name]


def rk4_step(state: SystemState, dt: float, rhs_closure) -> SystemState:
    """One classical RK4 step of the full state; rhs_closure(state) -> StateDerivative."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def shifted(k: StateDerivative, h: float) -> SystemState:
        return SystemState(state.a + h * k.da, state.sigma12 + h * k.dsigma12,
                           state.sigma22 + h * k.dsigma22, state.t + h)

    k1 = rhs_closure(state)
    k2 = rhs_closure(shifted(k1, dt / 2))
    k3 = rhs_closure(shifted(k2, dt / 2))
    k4 = rhs_closure(shifted(k3, dt))
    new = SystemState(
        state.a + dt / 6 * (k1.da + 2 * (k2.da + k3.da) + k4.da),
        state.sigma12 + dt / 6 * (k1.dsigma12 + 2 * (k2.dsigma12 + k3.dsigma12) + k4.dsigma12),
        state.sigma22 + dt / 6 * (k1.dsigma22 + 2 * (k2.dsigma22 + k3.dsigma22) + k4.dsigma22),
        state.t + dt,
    )
    if not (np.isfinite(new.a) and np.isfinite(new.sigma12).all()
            and np.isfinite(new.sigma22).all()):
        raise NumericsError(f"non-finite state after step at t = {state.t:.3e} s")
    return new


def _breakpoints(t_start: float, t_end: float, sample_dt: float,
                 edges: list[float], tol: float) -> np.ndarray:
    n_ticks = int(math.floor((t_end - t_start) / sample_dt + 1e-9))
    ticks = t_start + sample_dt * np.arange(n_ticks + 1)
    pts = np.concatenate([ticks, np.asarray(edges, dtype=float), [t_end]])
    pts = pts[(pts >= t_start - tol) & (pts <= t_end + tol)]
    pts = np.sort(pts)
    keep = np.concatenate([[True], np.diff(pts) > tol])
    return pts[keep]


def default_track_indices(n_classes: int, max_tracked: int = 33) -> np.ndarray:
    """Center class plus an even spread over the grid."""
    if n_classes <= max_tracked:
        return np.arange(n_classes)
    idx = np.unique(np.round(np.linspace(0, n_classes - 1, max_tracked)).astype(int))
    center = n_classes // 2
    return np.unique(np.concatenate([idx, [center]]))


def integrate(cavity: CavityParams, ensembles: list[SubEnsemble] | EnsembleArrays,
              drive: DriveParams, initial_state: SystemState, t_end: float,
              config: IntegratorConfig, *, snapshot_times: dict[str, float] | None = None,
              track_indices: np.ndarray | None = None,
              stage_markers: list[tuple[str, float]] | None = None) -> Trajectory:
    """Integrate from initial_state.t to t_end under the given drive schedule."""
    ens = ensembles if isinstance(ensembles, EnsembleArrays) else pack_ensembles(ensembles)
    if initial_state.n_classes != len(ens):
        raise ValueError("initial state and ensemble list disagree on class count")

    det = ens.omega_a - drive.omega_d
    det_c = cavity.omega_c - drive.omega_d
    max_det = float(np.abs(det).max()) if len(det) else 0.0
    guard = config.dt_free * max(max_det, abs(det_c))
    if guard >= GUARD_LIMIT:
        raise ConfigError(
            f"accuracy guard violated: dt_free * max detuning = {guard:.3f} rad "
            f">= {GUARD_LIMIT}; reduce dt_free below "
            f"{GUARD_LIMIT / max(max_det, abs(det_c)):.2e} s")

    t_start = initial_state.t
    tol = 0.25 * config.dt_pulse
    edges = [t for seg in drive.segments for t in seg[:2] if t_start < t < t_end]
    snapshot_times = dict(snapshot_times or {})
    edges += [t for t in snapshot_times.values() if t_start < t < t_end]
    pts = _breakpoints(t_start, t_end, config.sample_dt, edges, tol)

    if track_indices is None:
        track_indices = default_track_indices(len(ens))
    track_indices = np.asarray(track_indices, dtype=np.intp)

    sqrt_k1 = math.sqrt(cavity.kappa1)
    khalf = 0.5 * cavity.kappa
    g_max = float(ens.g.max()) if len(ens) else 0.0
    scratch12, scratch22 = _kernel.make_scratch(len(ens))

    a = complex(initial_state.a)
    s12 = initial_state.sigma12.astype(np.complex128, copy=True)
    s22 = initial_state.sigma22.astype(np.float64, copy=True)

    n_pts = len(pts)
    out_a = np.empty(n_pts, dtype=np.complex128)
    out_12 = np.empty((n_pts, len(track_indices)), dtype=np.complex128)
    out_22 = np.empty((n_pts, len(track_indices)), dtype=np.float64)
    out_a[0] = a
    out_12[0] = s12[track_indices]
    out_22[0] = s22[track_indices]

    snapshots: dict[str, SystemState] = {}

    def grab_snapshots(t_now: float):
        for name, t_req in list(snapshot_times.items()):
            if abs(t_req - t_now) <= tol or (t_req <= t_start and t_now == t_start):
                snapshots[name] = SystemState(a, s12.copy(), s22.copy(), t_now)
                del snapshot_times[name]

    grab_snapshots(t_start)

    viol_max = 0.0
    n_steps = 0
    for k in range(n_pts - 1):
        t0, t1 = pts[k], pts[k + 1]
        span = t1 - t0
        amp = drive.amplitude_at(0.5 * (t0 + t1))
        base_dt = config.dt_pulse if amp > 0.0 else config.dt_free

        # refine below base_dt when coherent rotation would outrun THETA_MAX
        s_now = abs(np.add.reduce(ens.g_n * s12)) if len(ens) else 0.0
        a_bound = abs(a) + span * (sqrt_k1 * amp + s_now)
        rate = max_det + khalf + abs(det_c) + RATE_SAFETY * 2.0 * g_max * a_bound
        dt_target = base_dt if rate <= 0 else min(base_dt, THETA_MAX / rate)
        n_sub = max(1, int(math.ceil(span / dt_target - 1e-9)))
        if n_sub > MAX_SUBSTEPS:
            raise NumericsError(f"step refinement exploded at t = {t0:.3e} s "
                                f"({n_sub} substeps requested)")

        a = _kernel.integrate_span(a, s12, s22, span / n_sub, n_sub, det_c, khalf,
                                   complex(sqrt_k1 * amp), det, ens.decoherence, ens.gamma,
                                   ens.relaxation, ens.g, ens.g_n, scratch12, scratch22)
        n_steps += n_sub

        if not (np.isfinite(a) and np.isfinite(s12).all() and np.isfinite(s22).all()):
            raise NumericsError(f"non-finite state in interval ending at t = {t1:.3e} s")
        viol = float((np.abs(s12) ** 2 - s22 * (1.0 - s22)).max()) if len(ens) else 0.0
        if viol > viol_max:
            viol_max = viol
        if viol > BLOCH_TOL:
            raise NumericsError(
                f"Bloch-sphere bound violated by {viol:.2e} at t = {t1:.3e} s; "
                "reduce the integration step")

        out_a[k + 1] = a
        out_12[k + 1] = s12[track_indices]
        out_22[k + 1] = s22[track_indices]
        grab_snapshots(t1)

    final = SystemState(a, s12, s22, float(pts[-1]))
    return Trajectory(times=pts, a=out_a, track_indices=track_indices,
                      track_sigma12=out_12, track_sigma22=out_22, snapshots=snapshots,
                      final_state=final, stage_markers=list(stage_markers or []),
                      bloch_violation_max=viol_max, n_steps=n_steps)


def validate_relaxation_stage(ensembles: list[SubEnsemble], eta_on: bool,
                              start_sigma22: float, rel_tol: float = 1e-6) -> float:
    """Time-step the undriven population equation and compare to its closed form.

    With a = 0 and s12 = 0 the populations relax as
    s22(t) = s_inf + (s22(0) - s_inf) exp(-(2*gamma + eta) t) toward the
    stage fixed point; returns the worst relative error at the end time.
    Detunings are irrelevant (nothing rotates), so the check runs with the
    coarse step suited to the slow relaxation rates.
    """
    ens = pack_ensembles(ensembles)
    rel = ens.relaxation if eta_on else 2.0 * ens.gamma
    gam = ens.gamma
    slowest = float(rel.min())
    if slowest <= 0:
        raise ValueError("relaxation validation needs gamma or eta > 0")
    t_end = 10.0 / slowest
    n_steps = 4000
    dt = t_end / n_steps
    s22 = np.full(len(ens), start_sigma22)
    eta_eff = ens.eta if eta_on else np.zeros_like(ens.eta)
    rel_eff = 2.0 * gam + eta_eff
    for _ in range(n_steps):
        k1 = gam - rel_eff * s22
        k2 = gam - rel_eff * (s22 + 0.5 * dt * k1)
        k3 = gam - rel_eff * (s22 + 0.5 * dt * k2)
        k4 = gam - rel_eff * (s22 + dt * k3)
        s22 = s22 + dt / 6 * (k1 + 2 * (k2 + k3) + k4)
    s_inf = gam / rel_eff
    exact = s_inf + (start_sigma22 - s_inf) * np.exp(-rel_eff * t_end)
    err = float(np.abs(s22 - exact).max())
    if err > rel_tol:
        raise NumericsError(f"stage relaxation check failed: error {err:.2e} > {rel_tol}")
    return err


def run_protocol(cavity: CavityParams, ensembles: list[SubEnsemble],
                 sequence: HahnSequence, config: IntegratorConfig, *,
                 initial_state: SystemState | None = None,
                 snapshots: bool = True, track_indices: np.ndarray | None = None,
                 extra_snapshots: dict[str, float] | None = None,
                 stage_validation: bool = False) -> Trajectory:
    """Three-stage protocol: thermal fixed point, cooled fixed point, pulsed drive.

    Stages 1 and 2 use the closed-form fixed points; stage_validation
    additionally time-steps the relaxation equations against the closed forms.
    Stage 3 starts at t = 0 with the first pulse edge.
    """
    ens_list = list(ensembles)
    if stage_validation:
        validate_relaxation_stage(ens_list, eta_on=False, start_sigma22=0.0)
        validate_relaxation_stage(ens_list, eta_on=True, start_sigma22=0.5)

    if initial_state is None:
        initial_state = cooled_steady_state(ens_list)
    markers = [("pulse-1-start", 0.0), ("pulse-1-end", sequence.t_pi2),
               ("pulse-2-start", sequence.pulse2_start),
               ("pulse-2-end", sequence.pulse2_end)]
    snapshot_times = sequence.snapshot_events() if snapshots else {}
    snapshot_times.update(extra_snapshots or {})
    traj = integrate(cavity, ens_list, sequence.drive(), initial_state, sequence.t_end,
                     config, snapshot_times=snapshot_times or None,
                     track_indices=track_indices, stage_markers=markers)
    traj.meta["sequence"] = sequence
    traj.meta["thermal_state_sigma22"] = 0.5
    return traj


def run_free_evolution(cavity: CavityParams, ensembles: list[SubEnsemble],
                       initial_state: SystemState, t_end: float, omega_d: float,
                       config: IntegratorConfig,
                       track_indices: np.ndarray | None = None) -> Trajectory:
    """Undriven evolution from a prepared state, in the frame rotating at omega_d."""
    drive = DriveParams(omega_d=omega_d, segments=())
    return integrate(cavity, ensembles, drive, initial_state, t_end, config,
                     track_indices=track_indices)


def coherent_minus_x_state(ensembles: list[SubEnsemble]) -> SystemState:
    """Pure product state with every Bloch vector along -x: s12 = -1/2, s22 = 1/2."""
    n = len(ensembles)
    return SystemState(a=0j, sigma12=np.full(n, -0.5 + 0j), sigma22=np.full(n, 0.5), t=0.0)
