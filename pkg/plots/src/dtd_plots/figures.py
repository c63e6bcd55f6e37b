"""The five figure kinds rendered from simulator output files."""
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .schema import read_daily, read_sweep, sweep_series  # noqa: E402

WINDOW_COLOR = "0.85"
FIXED_STYLE = dict(color="tab:red", label="fixed")
DYNAMIC_STYLE = dict(color="tab:blue", label="dynamic")


@dataclass
class PlotSpec:
    kind: str
    infile: str
    outfile: str
    infile2: str | None = None
    window: tuple | None = (51, 100)   # attack-day shading; None disables
    smoothed: bool = True
    dpi: int = 150


def _shade_window(ax, window):
    if window is not None:
        ax.axvspan(window[0], window[1], color=WINDOW_COLOR, zorder=0,
                   label="attack window")


def _tstt_curve(data, smoothed):
    return data.tstt_smoothed if smoothed else data.tstt


def fig_timeseries(spec: PlotSpec):
    """TSTT vs day; optional second file overlaid as the fixed-trust run."""
    data = read_daily(spec.infile)
    fig, ax = plt.subplots(figsize=(7, 4))
    _shade_window(ax, spec.window)
    ax.plot(data.day, _tstt_curve(data, spec.smoothed), **DYNAMIC_STYLE)
    if spec.infile2:
        other = read_daily(spec.infile2)
        ax.plot(other.day, _tstt_curve(other, spec.smoothed), **FIXED_STYLE)
    ax.set_xlabel("day")
    ax.set_ylabel("TSTT [veh·s]" + (" (smoothed)" if spec.smoothed else ""))
    ax.legend(loc="best")
    return fig


def fig_sweep(spec: PlotSpec):
    """poatt_aw vs swept value, one curve per trust mode present."""
    data = read_sweep(spec.infile)
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, style in (("fixed", FIXED_STYLE), ("dynamic", DYNAMIC_STYLE)):
        xs, ys = sweep_series(data, "poatt_aw", mode)
        if xs.size:
            ax.plot(xs, ys, marker="o", **style)
    ax.axhline(1.0, color="0.6", lw=0.8)
    ax.set_xlabel(data.param)
    ax.set_ylabel("poatt_aw")
    ax.legend(loc="best")
    return fig


def fig_composition(spec: PlotSpec):
    """Impact vs fleet-composition value, attenuation on a twin axis."""
    data = read_sweep(spec.infile)
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, style in (("fixed", FIXED_STYLE), ("dynamic", DYNAMIC_STYLE)):
        xs, ys = sweep_series(data, "poatt_aw", mode)
        if xs.size:
            ax.plot(xs, ys, marker="s", **style)
    ax.set_xlabel(data.param)
    ax.set_ylabel("poatt_aw")
    xs, tia = sweep_series(data, "tia", "dynamic")
    if xs.size:
        ax2 = ax.twinx()
        ax2.plot(xs, tia, color="tab:green", ls="--", marker=".", label="tia")
        ax2.set_ylabel("tia")
        ax2.legend(loc="lower right")
    ax.legend(loc="upper left")
    return fig


def fig_recovery(spec: PlotSpec):
    """Recovery days vs swept value; gap between curves = hidden window."""
    data = read_sweep(spec.infile)
    fig, ax = plt.subplots(figsize=(6, 4))
    mode = "dynamic" if any(r["trust_mode"] == "dynamic" for r in data.rows) \
        else data.rows[0]["trust_mode"]
    xs_t, trust_days = sweep_series(data, "trust_recovery_day", mode)
    xs_c, tstt_days = sweep_series(data, "tstt_recovery_day", mode)
    if xs_t.size:
        ax.plot(xs_t, trust_days, marker="o", color="tab:blue",
                label="trust recovery")
    if xs_c.size:
        ax.plot(xs_c, tstt_days, marker="o", color="tab:red",
                label="congestion recovery")
    if xs_t.size and xs_c.size and len(xs_t) == len(xs_c):
        ax.fill_between(xs_t, tstt_days, trust_days, color="tab:blue",
                        alpha=0.15, label="hidden window")
    ax.set_xlabel(data.param)
    ax.set_ylabel("days after attack end")
    ax.legend(loc="best")
    return fig


def fig_trust(spec: PlotSpec):
    """Per-class trust trajectories from one run."""
    data = read_daily(spec.infile)
    fig, ax = plt.subplots(figsize=(7, 4))
    _shade_window(ax, spec.window)
    for name in data.classes:
        ax.plot(data.day, data.trust[name], label=f"T_{name}")
    ax.set_xlabel("day")
    ax.set_ylabel("trust")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best")
    return fig


FIGURE_KINDS = {
    "timeseries": fig_timeseries,
    "sweep": fig_sweep,
    "composition": fig_composition,
    "recovery": fig_recovery,
    "trust": fig_trust,
}


def render(spec: PlotSpec) -> str:
    """Render one figure kind to spec.outfile; returns the output path."""
    try:
        builder = FIGURE_KINDS[spec.kind]
    except KeyError:
        raise ValueError(f"unknown figure kind {spec.kind!r}; "
                         f"choose from {sorted(FIGURE_KINDS)}") from None
    fig = builder(spec)
    try:
        fig.savefig(spec.outfile, dpi=spec.dpi, bbox_inches="tight")
    finally:
        plt.close(fig)
    return spec.outfile
