"""Render figures from workbench CSV outputs.

Each figure kind consumes the CSV schema the harness writes, verbatim, and
produces one PNG. Rendering is batch and deterministic: the same inputs give
the same bytes, the inputs are never touched, and the output file appears
atomically or not at all.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
from pathlib import Path
from typing import Callable, Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.colors import LogNorm

KINDS = (
    "density-curve",
    "noiseless-error",
    "noisy-optimum",
    "covariance-maps",
)

# Fixed style so the output does not depend on the ambient matplotlibrc.
_RC = {
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linewidth": 0.5,
    "lines.linewidth": 1.2,
    "lines.markersize": 4.5,
    "legend.fontsize": 8,
    "figure.constrained_layout.use": True,
}

# Covariance heat maps share one color scale per figure kind, not per run,
# so panels stay comparable across figures.
_COV_NORM = dict(vmin=1e-12, vmax=1.0)


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSVs by role, figure kind, axis flags, output path.

    ``logx``/``logy`` override the default axis scales of the kind's data
    panels; ``None`` keeps the defaults (log scales on coupling-strength and
    noise-rate axes).
    """

    kind: str
    inputs: Mapping[str, Path | str]
    output: Path | str
    logx: bool | None = None
    logy: bool | None = None

    def input_path(self, role: str) -> Path:
        if role not in self.inputs:
            raise ValueError(f"figure kind '{self.kind}' needs input '{role}'")
        return Path(self.inputs[role])


def _load(path: Path, columns: tuple[str, ...], label: str) -> pd.DataFrame:
    """Read one CSV and check it is nonempty with the referenced columns."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise ValueError(f"{label} {path.name} is empty") from None
    if frame.empty:
        raise ValueError(f"{label} {path.name} is empty")
    for col in columns:
        if col not in frame.columns:
            raise ValueError(f"{label} {path.name} is missing column '{col}'")
    return frame


def _ok_rows(frame: pd.DataFrame, path: Path) -> pd.DataFrame:
    if "status" in frame.columns:
        frame = frame[frame["status"] == "ok"]
        if frame.empty:
            raise ValueError(f"{path.name} has no ok rows")
    return frame


def _scale(ax, spec: FigureSpec, default_logx: bool, default_logy: bool) -> None:
    logx = default_logx if spec.logx is None else spec.logx
    logy = default_logy if spec.logy is None else spec.logy
    ax.set_xscale("log" if logx else "linear")
    ax.set_yscale("log" if logy else "linear")


def _render_density_curve(spec: FigureSpec) -> plt.Figure:
    """Steady-state density against the coupling J, target lines plus
    simulator markers at each requested coupling strength."""
    target = _load(
        spec.input_path("target"),
        ("n", "coupling_j", "density"),
        "target curve",
    )
    sim = _load(
        spec.input_path("simulator"),
        ("n", "coupling_j", "omega", "density"),
        "simulator curve",
    )
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for n in sorted(target["n"].unique()):
        rows = target[target["n"] == n].sort_values("coupling_j")
        ax.plot(rows["coupling_j"], rows["density"], "-", label=f"target n={n}")
    for omega in sorted(sim["omega"].unique()):
        rows = sim[sim["omega"] == omega].sort_values("coupling_j")
        n = int(rows["n"].iloc[0])
        ax.plot(
            rows["coupling_j"],
            rows["density"],
            "o",
            mfc="none",
            label=f"simulator $\\omega$={omega:g}, n={n}",
        )
    _scale(ax, spec, False, False)
    ax.set_xlabel("coupling J")
    ax.set_ylabel("steady-state density")
    ax.legend()
    return fig


def _render_noiseless_error(spec: FigureSpec) -> plt.Figure:
    """Three panels: steady error vs n, fixed-time error vs n, and both
    errors against omega at the largest chain."""
    path = spec.input_path("sweep")
    frame = _ok_rows(
        _load(
            path,
            ("n", "omega", "error_steady", "error_fixed_t", "t_fixed"),
            "noiseless sweep",
        ),
        path,
    )
    fig, axes = plt.subplots(1, 3, figsize=(9.6, 3.1))
    for ax, column, title in (
        (axes[0], "error_steady", "(a) steady state"),
        (axes[1], "error_fixed_t", "(b) fixed time"),
    ):
        for omega in sorted(frame["omega"].unique()):
            rows = frame[frame["omega"] == omega].sort_values("n")
            ax.plot(rows["n"], rows[column], "o-", label=f"$\\omega$={omega:g}")
        _scale(ax, spec, False, True)
        ax.set_xlabel("chain length n")
        ax.set_ylabel("observable error")
        ax.set_title(title)
    n_max = frame["n"].max()
    rows = frame[frame["n"] == n_max].sort_values("omega")
    ax = axes[2]
    ax.plot(rows["omega"], rows["error_steady"], "o-", label="steady")
    ax.plot(rows["omega"], rows["error_fixed_t"], "s-", label="fixed t")
    guide_x = np.array([rows["omega"].min(), rows["omega"].max()])
    anchor = rows["error_steady"].iloc[-1]
    ax.plot(
        guide_x,
        anchor * (guide_x / guide_x[-1]) ** 2,
        "k--",
        linewidth=0.9,
        label="$\\omega^2$ guide",
    )
    _scale(ax, spec, True, True)
    ax.set_xlabel("coupling strength $\\omega$")
    ax.set_ylabel("observable error")
    ax.set_title(f"(c) n={n_max}")
    for ax in axes:
        ax.legend()
    return fig


def _loglog_slope(xs: np.ndarray, ys: np.ndarray) -> float:
    coeffs = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(coeffs[0])


def _render_noisy_optimum(spec: FigureSpec) -> plt.Figure:
    """Error against omega per noise rate, with the per-rate optimum and its
    scaling when the optimum table is available."""
    path = spec.input_path("sweep")
    frame = _ok_rows(
        _load(path, ("delta", "omega", "error"), "noisy sweep"), path
    )
    optimum = None
    if "optimum" in spec.inputs:
        opath = spec.input_path("optimum")
        optimum = _load(
            opath,
            ("delta", "argmin_omega_refined", "min_error_refined"),
            "noisy optimum",
        )
        if "status" in optimum.columns:
            optimum = optimum[optimum["status"] == "ok"]

    panels = 2 if optimum is not None and len(optimum) >= 2 else 1
    fig, axes = plt.subplots(1, panels, figsize=(4.8 * panels, 3.4))
    axes = np.atleast_1d(axes)

    ax = axes[0]
    for delta in sorted(frame["delta"].unique()):
        rows = frame[frame["delta"] == delta].sort_values("omega")
        if delta == 0:
            ax.plot(
                rows["omega"], rows["error"], "--", color="0.5",
                label="$\\delta$=0",
            )
        else:
            ax.plot(rows["omega"], rows["error"], "o-", label=f"$\\delta$={delta:g}")
    if optimum is not None and not optimum.empty:
        ax.plot(
            optimum["argmin_omega_refined"],
            optimum["min_error_refined"],
            "k*",
            markersize=9,
            label="optimum",
        )
    _scale(ax, spec, True, True)
    ax.set_xlabel("coupling strength $\\omega$")
    ax.set_ylabel("observable error")
    ax.set_title("(a) error vs $\\omega$")
    ax.legend()

    if panels == 2:
        ax = axes[1]
        deltas = optimum["delta"].to_numpy(float)
        for column, marker, label in (
            ("argmin_omega_refined", "o-", "$\\omega^*$"),
            ("min_error_refined", "s-", "min error"),
        ):
            values = optimum[column].to_numpy(float)
            slope = _loglog_slope(deltas, values)
            ax.plot(deltas, values, marker, label=f"{label} (slope {slope:.2f})")
        _scale(ax, spec, True, True)
        ax.set_xlabel("noise rate $\\delta$")
        ax.set_title("(b) optimum scaling")
        ax.legend()
    return fig


def _render_covariance_maps(spec: FigureSpec) -> plt.Figure:
    """One heat map per (field, noise) point of the phase map, all panels on
    the fixed per-kind color scale."""
    path = spec.input_path("map")
    frame = _ok_rows(
        _load(
            path,
            ("n", "h", "delta", "decay_length", "matrix_file"),
            "phase map",
        ),
        path,
    )
    fields = sorted(frame["h"].unique())
    deltas = sorted(frame["delta"].unique())
    fig, axes = plt.subplots(
        len(fields),
        len(deltas),
        figsize=(3.0 * len(deltas) + 0.9, 2.7 * len(fields)),
        squeeze=False,
    )
    norm = LogNorm(**_COV_NORM)
    image = None
    for _, row in frame.iterrows():
        mpath = path.parent / str(row["matrix_file"])
        mat_rows = _load(
            mpath, ("x", "y", "abs_cov"), "covariance matrix"
        )
        n = int(row["n"])
        mat = np.full((n, n), _COV_NORM["vmin"])
        xs = mat_rows["x"].to_numpy(int)
        ys = mat_rows["y"].to_numpy(int)
        mat[xs, ys] = np.maximum(
            mat_rows["abs_cov"].to_numpy(float), _COV_NORM["vmin"]
        )
        ax = axes[fields.index(row["h"])][deltas.index(row["delta"])]
        image = ax.imshow(mat, norm=norm, cmap="magma", origin="lower")
        ax.grid(False)
        length = row["decay_length"]
        tag = f", $\\xi$={length:.1f}" if np.isfinite(length) else ""
        ax.set_title(f"h={row['h']:g}, $\\delta$={row['delta']:g}{tag}")
        ax.set_xlabel("site y")
        ax.set_ylabel("site x")
    fig.colorbar(image, ax=axes, label="|cov|", shrink=0.85)
    return fig


_RENDERERS: dict[str, Callable[[FigureSpec], plt.Figure]] = {
    "density-curve": _render_density_curve,
    "noiseless-error": _render_noiseless_error,
    "noisy-optimum": _render_noisy_optimum,
    "covariance-maps": _render_covariance_maps,
}


def _atomic_save(fig: plt.Figure, out_path: Path) -> None:
    """Write the PNG next to its destination and rename into place."""
    out_path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        dir=out_path.parent, suffix=".png.part", delete=False
    )
    try:
        # Software metadata would otherwise embed the renderer version.
        fig.savefig(handle, format="png", metadata={"Software": None})
        handle.close()
        os.replace(handle.name, out_path)
    except BaseException:
        handle.close()
        os.unlink(handle.name)
        raise


def render(spec: FigureSpec) -> Path:
    """Render one figure and return the output path.

    All input validation happens before anything is written, so a failed
    render leaves no output file behind.
    """
    if spec.kind not in KINDS:
        raise ValueError(f"unknown figure kind '{spec.kind}'")
    out_path = Path(spec.output)
    with plt.rc_context(_RC):
        fig = _RENDERERS[spec.kind](spec)
        try:
            _atomic_save(fig, out_path)
        finally:
            plt.close(fig)
    return out_path
