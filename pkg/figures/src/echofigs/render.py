"""Deterministic figure rendering for the five documented output kinds.

Every figure uses a fixed size, the Agg backend, and no timestamps, so
re-rendering identical inputs reproduces the image byte for byte (given the
same matplotlib build).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reading import SchemaError, read_table, require_columns  # noqa: E402

KINDS = ("trace", "snapshot", "dicke-space", "sweep", "spectrum")

plt.rcParams.update({
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
})


@dataclass
class PlotSpec:
    """What to draw: input file(s), figure kind, optional axis ranges, output path."""

    inputs: list[str]
    kind: str
    output: str
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    title: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")


def _finish(fig, ax, spec: PlotSpec) -> Path:
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    if spec.title:
        ax.set_title(spec.title)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Software": "echofigs"})
    plt.close(fig)
    return out


def render_trace(spec: PlotSpec) -> Path:
    """Emitted power versus time with the thermal noise-floor line."""
    meta, cols = read_table(spec.inputs[0])
    require_columns(cols, ["t_s", "photon_n", "power_dbm"], spec.inputs[0])
    fig, ax = plt.subplots()
    t_us = cols["t_s"] * 1e6
    power = np.array(cols["power_dbm"], dtype=float)
    shown = np.where(np.isfinite(power), power, np.nan)
    ax.plot(t_us, shown, lw=0.7, color="tab:blue")
    floor = meta.get("noise_floor_dbm")
    if floor is not None:
        ax.axhline(floor, color="tab:gray", ls="--", lw=1.0, label="thermal floor")
        ax.legend(loc="upper right")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("output power (dBm)")
    finite = shown[np.isfinite(shown)]
    if len(finite) and spec.ylim is None:
        lo = (floor - 25.0) if floor is not None else np.percentile(finite, 1) - 10
        ax.set_ylim(lo, finite.max() + 8)
    return _finish(fig, ax, spec)


def render_snapshot(spec: PlotSpec) -> Path:
    """Excitation profile versus detuning with a zoom inset on the grating."""
    _, cols = read_table(spec.inputs[0])
    require_columns(cols, ["detuning_hz", "m_bar_over_n"], spec.inputs[0])
    det_mhz = cols["detuning_hz"] / 1e6
    value_key = spec.options.get("column", "m_bar_over_n")
    if value_key not in cols:
        raise SchemaError(f"{spec.inputs[0]}: missing required column {value_key!r}")
    values = cols[value_key]
    fig, ax = plt.subplots()
    ax.plot(det_mhz, values, lw=0.8, color="tab:red")
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel(value_key.replace("_", " "))
    zoom = float(spec.options.get("zoom_mhz", 0.5))
    sel = np.abs(det_mhz) <= zoom
    if sel.sum() >= 8:
        inset = ax.inset_axes([0.62, 0.62, 0.35, 0.33])
        inset.plot(det_mhz[sel], values[sel], lw=0.8, color="tab:red")
        inset.tick_params(labelsize=6)
        inset.grid(alpha=0.2)
    return _finish(fig, ax, spec)


def render_dicke_space(spec: PlotSpec) -> Path:
    """Per-class trajectories in the (J/N, M/N) plane inside the Dicke triangle."""
    _, cols = read_table(spec.inputs[0])
    require_columns(cols, ["t_s", "class_index", "j_bar_over_n", "m_bar_over_n"],
                    spec.inputs[0])
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    # boundary |M| <= J <= N/2 in per-spin units
    ax.plot([0.0, 0.5], [0.0, 0.5], color="k", lw=1.2)
    ax.plot([0.0, 0.5], [0.0, -0.5], color="k", lw=1.2)
    ax.plot([0.5, 0.5], [-0.5, 0.5], color="k", lw=1.2)
    indices = np.unique(cols["class_index"])
    chosen = spec.options.get("classes")
    if chosen is not None:
        indices = [i for i in indices if int(i) in chosen]
    cmap = plt.get_cmap("viridis")
    for pos, idx in enumerate(indices):
        sel = cols["class_index"] == idx
        color = cmap(0.15 + 0.7 * pos / max(len(indices) - 1, 1))
        ax.plot(cols["j_bar_over_n"][sel], cols["m_bar_over_n"][sel],
                lw=0.7, color=color)
    ax.set_xlabel("J / N")
    ax.set_ylabel("M / N")
    ax.set_xlim(-0.02, 0.54)
    ax.set_ylim(-0.54, 0.54)
    return _finish(fig, ax, spec)


def render_sweep(spec: PlotSpec) -> Path:
    """Echo powers (and grating amplitude) against the swept axis."""
    meta, cols = read_table(spec.inputs[0])
    axis = meta.get("axis")
    if axis is None or axis not in cols:
        known = [c for c in ("power_dbm", "detuning_hz", "eta_per_s") if c in cols]
        if not known:
            raise SchemaError(f"{spec.inputs[0]}: missing required column "
                              f"'power_dbm'/'detuning_hz'/'eta_per_s'")
        axis = known[0]
    x = cols[axis]
    fig, ax = plt.subplots()
    if "g_eff_hz" in cols:
        ax.plot(x, cols["g_eff_hz"] / 1e6, marker="o", ms=3, lw=0.9, color="tab:blue")
        ax.set_ylabel("dip splitting (MHz)")
    else:
        require_columns(cols, ["echo1_dbm", "echo2_dbm", "echo3_dbm"], spec.inputs[0])
        for k, color in zip((1, 2, 3), ("tab:blue", "tab:orange", "tab:green")):
            y = np.array(cols[f"echo{k}_dbm"], dtype=float)
            y = np.where(np.isfinite(y), y, np.nan)
            ax.plot(x, y, marker="o", ms=3, lw=0.9, color=color, label=f"echo {k}")
        floor = meta.get("noise_floor_dbm")
        if floor is not None:
            ax.axhline(floor, color="tab:gray", ls="--", lw=1.0, label="thermal floor")
        ax.set_ylabel("echo power (dBm)")
        ax.legend(loc="best")
        if "grating_r" in cols:
            twin = ax.twinx()
            twin.plot(x, cols["grating_r"], color="tab:red", lw=0.8, ls=":")
            twin.set_ylabel("grating amplitude R", color="tab:red")
            twin.grid(False)
    if axis == "eta_per_s" and np.all(x > 0):
        ax.set_xscale("log")
    ax.set_xlabel(axis.replace("_", " "))
    return _finish(fig, ax, spec)


def render_spectrum(spec: PlotSpec) -> Path:
    """Normalized reflectance versus probe detuning."""
    _, cols = read_table(spec.inputs[0])
    require_columns(cols, ["detuning_hz", "reflectance"], spec.inputs[0])
    fig, ax = plt.subplots()
    ax.plot(cols["detuning_hz"] / 1e6, cols["reflectance"], lw=0.9, color="tab:blue")
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("normalized reflectance")
    ax.set_ylim(0.0, 1.1)
    return _finish(fig, ax, spec)


RENDERERS = {
    "trace": render_trace,
    "snapshot": render_snapshot,
    "dicke-space": render_dicke_space,
    "sweep": render_sweep,
    "spectrum": render_spectrum,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; returns the output path."""
    return RENDERERS[spec.kind](spec)
