"""Scenario execution: runs the engine and persists the documented outputs.

Sweep points execute in separate processes (worker count from the
SPINECHO_WORKERS environment variable); results are gathered by point index,
so the output table does not depend on scheduling order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (detect_beats, detect_echoes, extract_grating, reflection_spectrum)
from .errors import NumericsError, SpinEchoError
from .integrator import (Trajectory, coherent_minus_x_state, run_free_evolution, run_protocol)
from .model import TWO_PI, cooled_steady_state, pack_ensembles
from .observables import BlochRecord, PowerTrace
from .scenarios import (Materialized, ScenarioConfig, SweepConfig, config_to_dict, materialize)
from .storage import write_csv, write_json


def _power_trace_columns(trace: PowerTrace, traj: Trajectory) -> dict[str, np.ndarray]:
    return {
        "t_s": trace.times,
        "re_a": traj.a.real,
        "im_a": traj.a.imag,
        "photon_n": trace.photon_number,
        "power_dbm": trace.power_dbm,
    }


def _snapshot_columns(record: BlochRecord) -> dict[str, np.ndarray]:
    with np.errstate(invalid="ignore", divide="ignore"):
        inv_n = np.where(record.n_spins > 0, 1.0 / record.n_spins, 0.0)
    return {
        "detuning_hz": record.detuning_hz,
        "m_bar_over_n": record.m_bar * inv_n,
        "jx_over_n": record.jx * inv_n,
        "jy_over_n": record.jy * inv_n,
        "jz_over_n": record.jz * inv_n,
        "j_bar_over_n": record.j_bar * inv_n,
    }


def _dicke_trace_columns(traj: Trajectory, mat: Materialized) -> dict[str, np.ndarray]:
    ens = pack_ensembles(mat.ensembles)
    idx = traj.track_indices
    n_spins = ens.n_spins[idx]
    det_hz = (ens.omega_a[idx] - mat.cavity.omega_c) / TWO_PI
    n_t, n_k = traj.track_sigma12.shape
    jx = traj.track_sigma12.real
    jy = -traj.track_sigma12.imag
    jz = traj.track_sigma22 - 0.5
    j_bar = np.sqrt(jx**2 + jy**2 + jz**2)
    rows_t = np.repeat(traj.times, n_k)
    return {
        "t_s": rows_t,
        "class_index": np.tile(idx.astype(float), n_t),
        "detuning_hz": np.tile(det_hz, n_t),
        "j_bar_over_n": j_bar.ravel(),
        "m_bar_over_n": jz.ravel(),
    }


def run_scenario(cfg: ScenarioConfig, outdir: str | Path, *,
                 stage_validation: bool = False) -> dict:
    """Run one trajectory scenario and write its documented outputs."""
    outdir = Path(outdir)
    mat = materialize(cfg)
    meta = {"scenario": cfg.name, "config": config_to_dict(cfg)}
    ens = pack_ensembles(mat.ensembles)

    if cfg.kind == "hahn":
        traj = run_protocol(mat.cavity, mat.ensembles, mat.sequence, mat.integrator,
                            stage_validation=stage_validation)
    else:
        if cfg.free.initial == "minus-x":
            state = coherent_minus_x_state(mat.ensembles)
        elif cfg.free.initial == "cooled":
            state = cooled_steady_state(mat.ensembles)
        else:
            raise SpinEchoError(f"unknown initial state {cfg.free.initial!r}")
        traj = run_free_evolution(mat.cavity, mat.ensembles, state, cfg.free.t_end_s,
                                  mat.omega_d, mat.integrator)

    trace = PowerTrace.from_trajectory(traj, mat.cavity)
    trace_meta = {**meta, "noise_floor_dbm": trace.noise_floor_dbm}
    paths = {"power_trace": write_csv(outdir / "power_trace.csv",
                                      _power_trace_columns(trace, traj), trace_meta)}
    paths["dicke_trace"] = write_csv(outdir / "dicke_trace.csv",
                                     _dicke_trace_columns(traj, mat), meta)

    for name, snap in traj.snapshots.items():
        record = BlochRecord.from_state(snap, ens.omega_a, ens.n_spins, mat.cavity.omega_c)
        paths[f"snapshot_{name}"] = write_csv(
            outdir / f"snapshot_{name}.csv", _snapshot_columns(record),
            {**meta, "event": name, "t_s": snap.t})

    report: dict = {"bloch_violation_max": traj.bloch_violation_max,
                    "n_steps": traj.n_steps}
    if cfg.kind == "hahn":
        echoes = detect_echoes(trace, mat.sequence)
        report["echoes"] = {
            "peak_times_s": echoes.peak_times,
            "peak_powers_dbm": echoes.peak_powers_dbm,
            "peak_photon_numbers": echoes.peak_photon_numbers,
            "visible": echoes.visible,
            "n_visible": echoes.n_visible,
            "period_estimate_s": echoes.period_estimate,
            "noise_floor_dbm": echoes.noise_floor_dbm,
        }
        if "end-pulse-2" in traj.snapshots:
            snap = traj.snapshots["end-pulse-2"]
            det_hz = (ens.omega_a - mat.cavity.omega_c) / TWO_PI
            grating = extract_grating((det_hz, snap.sigma22 - 0.5), mat.analysis.window_hz)
            report["grating"] = {"f_hz": grating.f_hz, "amplitude": grating.amplitude,
                                 "method": grating.method,
                                 "low_confidence": grating.low_confidence}
        paths["echo_report"] = write_json(outdir / "echo_report.json", report, meta)
    else:
        period = 1.0 / cfg.ensemble.spacing_hz
        beats = detect_beats(trace, period)
        report["beats"] = {
            "strong_times_s": beats.strong_times,
            "strong_photon_numbers": beats.strong_photon_numbers,
            "weak_times_s": beats.weak_times,
            "weak_photon_numbers": beats.weak_photon_numbers,
            "period_s": beats.period,
            "fwhm_first_strong_s": beats.fwhm_first_strong,
        }
        paths["beat_report"] = write_json(outdir / "beat_report.json", report, meta)
    return {"trajectory": traj, "trace": trace, "report": report, "paths": paths}


def run_spectrum_scenario(cfg: ScenarioConfig, outdir: str | Path,
                          method: str = "linearized") -> dict:
    """Reflection spectrum of a scenario's cooled system."""
    outdir = Path(outdir)
    mat = materialize(cfg)
    meta = {"scenario": cfg.name, "config": config_to_dict(cfg), "method": method}
    spec = reflection_spectrum(mat.cavity, mat.ensembles,
                               span=TWO_PI * mat.analysis.spectrum_span_hz,
                               resolution=TWO_PI * mat.analysis.spectrum_resolution_hz,
                               method=method)
    paths = {"spectrum": write_csv(outdir / "spectrum.csv",
                                   {"detuning_hz": spec.detuning / TWO_PI,
                                    "reflectance": spec.reflectance}, meta)}
    report = {
        "g_eff_hz": spec.g_eff / TWO_PI,
        "regime": spec.regime,
        "dip_detunings_hz": spec.dip_detunings / TWO_PI,
        "normalization": spec.meta.get("normalization"),
    }
    paths["spectrum_report"] = write_json(outdir / "spectrum_report.json", report, meta)
    return {"spectrum": spec, "report": report, "paths": paths}


def _sweep_point(args) -> dict:
    index, sweep_dict, value = args
    from .scenarios import sweep_from_dict
    sweep = sweep_from_dict(sweep_dict)
    cfg = sweep.point(value)
    mat = materialize(cfg)
    row: dict = {"index": index, sweep.axis: value, "status": "ok"}
    try:
        if sweep.observable == "spectrum":
            spec = reflection_spectrum(mat.cavity, mat.ensembles,
                                       span=TWO_PI * mat.analysis.spectrum_span_hz,
                                       resolution=TWO_PI * mat.analysis.spectrum_resolution_hz)
            row.update(g_eff_hz=spec.g_eff / TWO_PI, regime=spec.regime)
            return row
        traj = run_protocol(mat.cavity, mat.ensembles, mat.sequence, mat.integrator,
                            track_indices=np.empty(0, dtype=np.intp))
        trace = PowerTrace.from_trajectory(traj, mat.cavity)
        echoes = detect_echoes(trace, mat.sequence)
        for k in range(3):
            power = echoes.peak_powers_dbm[k] if k < len(echoes.peak_powers_dbm) else -math.inf
            seen = bool(echoes.visible[k]) if k < len(echoes.visible) else False
            row[f"echo{k+1}_dbm"] = power
            row[f"echo{k+1}_visible"] = seen
        ens = pack_ensembles(mat.ensembles)
        snap = traj.snapshots["end-pulse-2"]
        det_hz = (ens.omega_a - mat.cavity.omega_c) / TWO_PI
        grating = extract_grating((det_hz, snap.sigma22 - 0.5), mat.analysis.window_hz)
        row.update(grating_f_hz=grating.f_hz, grating_r=grating.amplitude,
                   noise_floor_dbm=echoes.noise_floor_dbm)
    except NumericsError as exc:
        row["status"] = f"failed: {exc}"
    return row


def run_sweep(sweep: SweepConfig, outdir: str | Path, workers: int | None = None) -> dict:
    """Run every sweep point (in parallel) and persist the ordered result table.

    A point that fails integration marks its row, the partial table is saved,
    and the sweep aborts with an error.
    """
    outdir = Path(outdir)
    if workers is None:
        workers = int(os.environ.get("SPINECHO_WORKERS", "0")) or min(
            len(sweep.values), os.cpu_count() or 1)
    sweep_dict = {"name": sweep.name, "base": config_to_dict(sweep.base),
                  "axis": sweep.axis, "values": list(sweep.values),
                  "observable": sweep.observable}
    jobs = [(i, sweep_dict, v) for i, v in enumerate(sweep.values)]
    if workers <= 1 or len(jobs) == 1:
        rows = [_sweep_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    rows.sort(key=lambda r: r["index"])

    meta = {"sweep": sweep.name, "axis": sweep.axis, "observable": sweep.observable,
            "base_config": config_to_dict(sweep.base)}
    floors = [r["noise_floor_dbm"] for r in rows if "noise_floor_dbm" in r]
    if floors:
        meta["noise_floor_dbm"] = floors[0]
    report = {"rows": rows}
    paths = {"sweep_report": write_json(outdir / "sweep_report.json", report, meta)}
    if sweep.observable == "echoes":
        numeric = {
            sweep.axis: np.array([r[sweep.axis] for r in rows], dtype=float),
            **{f"echo{k}_dbm": np.array([r.get(f"echo{k}_dbm", math.nan) for r in rows])
               for k in (1, 2, 3)},
            **{f"echo{k}_visible": np.array(
                [float(r.get(f"echo{k}_visible", False)) for r in rows]) for k in (1, 2, 3)},
            "grating_f_hz": np.array([r.get("grating_f_hz", math.nan) for r in rows]),
            "grating_r": np.array([r.get("grating_r", math.nan) for r in rows]),
            "ok": np.array([float(r["status"] == "ok") for r in rows]),
        }
    else:
        numeric = {
            sweep.axis: np.array([r[sweep.axis] for r in rows], dtype=float),
            "g_eff_hz": np.array([r.get("g_eff_hz", math.nan) for r in rows]),
            "regime_code": np.array([{"weak": 0.0, "crossover": 1.0, "strong": 2.0}
                                     .get(r.get("regime"), math.nan) for r in rows]),
            "ok": np.array([float(r["status"] == "ok") for r in rows]),
        }
    paths["sweep_results"] = write_csv(outdir / "sweep_results.csv", numeric, meta)
    failed = [r for r in rows if r["status"] != "ok"]
    if failed:
        raise SpinEchoError(
            f"sweep {sweep.name}: {len(failed)} point(s) failed "
            f"(first at {sweep.axis} = {failed[0][sweep.axis]:g}); partial results saved")
    return {"rows": rows, "paths": paths}
