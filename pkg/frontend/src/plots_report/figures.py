"""Figure renderers for kleinwalk experiment directories.

Inputs are the documented CSV schemas plus their JSON side-cars; nothing is
recomputed here, the experiment files are the single source of truth. All
rendering is deterministic: fixed style, fixed dpi, pinned PNG metadata, so
re-rendering an unchanged directory reproduces identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("scatter", "growth", "gap", "dimension", "overlap")

_STYLE = {
    "figure.figsize": (7.0, 4.6),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "grid.linestyle": ":",
}
_PNG_METADATA = {"Software": "plots-report"}


class FigureError(ValueError):
    """Schema mismatch, missing input, or empty data."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which kind, from which experiment directory."""

    experiment_dir: Path
    kind: str
    output: Path
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; kinds: {FIGURE_KINDS}")


def read_table(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a CSV with schema validation; errors name the column mismatch."""
    if not path.exists():
        raise FigureError(f"missing input file {path}")
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path} has no header") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise FigureError(
                f"{path.name}: missing columns {missing}; found {header}"
            )
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path.name} has a header but no data rows")
    cols: dict[str, np.ndarray] = {}
    for name in required:
        i = header.index(name)
        values = [row[i] for row in rows]
        try:
            cols[name] = np.array([float(v) for v in values])
        except ValueError:
            cols[name] = np.array(values)
    return cols


def read_meta(path: Path) -> dict:
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _save(fig, spec: FigureSpec) -> Path:
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, metadata=_PNG_METADATA)
    plt.close(fig)
    return spec.output


def _new_axes():
    fig, ax = plt.subplots()
    return fig, ax


def render_scatter(spec: FigureSpec) -> Path:
    """Limit-set scatter(s) colored by log10 sample weight."""
    stems = [s for s in ("harmonic", "ps") if (spec.experiment_dir / f"{s}.csv").exists()]
    if not stems:
        raise FigureError(f"no harmonic.csv or ps.csv in {spec.experiment_dir}")
    fig, axes = plt.subplots(1, len(stems), figsize=(5.0 * len(stems), 4.6), squeeze=False)
    for ax, stem in zip(axes[0], stems):
        t = read_table(spec.experiment_dir / f"{stem}.csv", ("x", "y", "z", "weight"))
        meta = read_meta(spec.experiment_dir / f"{stem}.meta.json")
        if meta.get("ambient_dim", 3) == 2:
            u, v, labels = t["x"], t["z"], ("x", "z")
        else:
            u, v, labels = t["x"], t["y"], ("x", "y")
        sc = ax.scatter(u, v, c=np.log10(t["weight"]), s=2.0, cmap="viridis",
                        rasterized=False, linewidths=0)
        ax.set_xlabel(labels[0])
        ax.set_ylabel(labels[1])
        ax.set_aspect("equal")
        ax.set_title(f"{stem} sample ({len(u)} points)")
        fig.colorbar(sc, ax=ax, label="log10 weight")
    return _save(fig, spec)


def render_growth(spec: FigureSpec) -> Path:
    """log N(r) against r with the fitted growth line annotated."""
    t = read_table(spec.experiment_dir / "growth.csv", ("r", "count"))
    meta = {}
    for name in ("diagnose.meta.json", "orbit.meta.json"):
        meta = read_meta(spec.experiment_dir / name)
        if meta:
            break
    fig, ax = _new_axes()
    log_n = np.log(t["count"])
    ax.plot(t["r"], log_n, "o", ms=3.5, label="log N(r)")
    delta = meta.get("delta_hat")
    if delta is not None:
        coef = np.polyfit(t["r"], log_n, 1)  # intercept for display only
        ax.plot(t["r"], delta * t["r"] + (coef[1] + (coef[0] - delta) * t["r"].mean()),
                "-", lw=1.2, label=f"slope {delta:.4f}")
        ax.set_title(f"orbital growth, fitted exponent {delta:.4f}")
    else:
        ax.set_title("orbital growth")
    ax.set_xlabel("r")
    ax.set_ylabel("log N(r)")
    ax.legend(loc="upper left")
    return _save(fig, spec)


def render_gap(spec: FigureSpec) -> Path:
    """Gap magnitude on a log axis with the 10-threshold reference line."""
    t = read_table(spec.experiment_dir / "gap.csv",
                   ("n", "word_length", "hyp_dist", "d_green", "gap"))
    fig, ax = _new_axes()
    mag = np.maximum(-t["gap"], 1e-12)
    ax.semilogy(t["n"], mag, "-", lw=1.2, label="-gap(n)")
    ax.axhline(10.0, color="crimson", lw=1.0, ls="--", label="threshold 10")
    below = t["n"][t["gap"] < -10.0]
    if len(below):
        ax.axvline(below[0], color="crimson", lw=0.8, ls=":",
                   label=f"crossing at n = {int(below[0])}")
    ax.set_xlabel("n (parabolic power)")
    ax.set_ylabel("deficiency of the contradicted bound")
    ax.set_title("divergence of delta*d - d_G along parabolic powers")
    ax.legend(loc="lower right")
    return _save(fig, spec)


def render_dimension(spec: FigureSpec) -> Path:
    """Histograms of per-probe local-dimension slopes for the two samples."""
    stems = [s for s in ("dimension_harmonic", "dimension_ps")
             if (spec.experiment_dir / f"{s}.csv").exists()]
    if not stems:
        raise FigureError(f"no dimension CSVs in {spec.experiment_dir}")
    fig, ax = _new_axes()
    colors = {"dimension_harmonic": "tab:blue", "dimension_ps": "tab:orange"}
    for stem in stems:
        t = read_table(spec.experiment_dir / f"{stem}.csv", ("probe", "slope"))
        label = stem.replace("dimension_", "")
        ax.hist(t["slope"], bins=30, alpha=0.55, color=colors[stem], label=label)
        ax.axvline(float(np.mean(t["slope"])), color=colors[stem], lw=1.4)
    ax.set_xlabel("local dimension slope")
    ax.set_ylabel("probes")
    ax.set_title("per-probe local dimension")
    ax.legend()
    return _save(fig, spec)


def render_overlap(spec: FigureSpec) -> Path:
    """Binned overlap against bin count, with the sampling-noise baseline."""
    t = read_table(spec.experiment_dir / "overlap.csv",
                   ("bin_count", "overlap", "baseline_overlap"))
    fig, ax = _new_axes()
    ax.semilogx(t["bin_count"], t["overlap"], "o-", base=2, label="harmonic vs conformal")
    ax.semilogx(t["bin_count"], t["baseline_overlap"], "s--", base=2,
                label="independent harmonic baseline")
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("equal-area bins")
    ax.set_ylabel("total-variation overlap")
    ax.set_title("overlap decay under bin refinement")
    ax.legend(loc="lower left")
    return _save(fig, spec)


_RENDERERS = {
    "scatter": render_scatter,
    "growth": render_growth,
    "gap": render_gap,
    "dimension": render_dimension,
    "overlap": render_overlap,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; deterministic for fixed inputs."""
    with plt.rc_context({**_STYLE, **spec.style}):
        return _RENDERERS[spec.kind](spec)
