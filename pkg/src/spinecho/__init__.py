"""Deterministic mean-field simulator of a driven spin ensemble in a microwave cavity.

Reproduces room-temperature superradiant echo trains, the frequency-space
phase grating written by a two-pulse sequence, superradiant beats of discrete
combs, and weak-probe reflection spectra, together with the analysis chain
that turns trajectories into echo/grating/spectrum reports.
"""

from ._version import __version__
from .analysis import (BeatReport, EchoReport, GratingReport, ReflectionSpectrum,
                       classify_regime, detect_beats, detect_echoes, extract_geff,
                       extract_grating, fit_f_tau, jx_grating_period, reflection_spectrum)
from .ensembles import (CombEnsembleSpec, GaussianEnsembleSpec, SpinRates, build_comb,
                        build_gaussian)
from .errors import ConfigError, NumericsError, SpinEchoError
from .integrator import (HahnSequence, IntegratorConfig, Trajectory, coherent_minus_x_state,
                         integrate, omega_from_power, rk4_step, run_free_evolution,
                         run_protocol)
from .model import (CavityParams, DriveParams, SubEnsemble, SystemState, cooled_steady_state,
                    pack_ensembles, rhs, thermal_photon_number, thermal_steady_state)
from .observables import (BlochRecord, PowerTrace, bloch_components, dicke_numbers,
                          noise_floor_dbm, output_power_dbm, photon_number,
                          snapshot_excitation_profile)
from .runner import run_scenario, run_spectrum_scenario, run_sweep
from .scenarios import (ScenarioConfig, SweepConfig, builtin_scenarios, get_scenario,
                        load_config, materialize, save_config)

__all__ = [name for name in dir() if not name.startswith("_")]
