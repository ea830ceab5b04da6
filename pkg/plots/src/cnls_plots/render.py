"""Deterministic static figures from cnls CSV files.

Each render returns the exact arrays it drew together with their sha256
digests, and writes a ``.digest.txt`` sidecar, so a reviewer can verify that
a figure shows precisely the file contents (plus the declared premultiplier,
for the flatness plot) and nothing recomputed.  Guide lines are constructed
from the requested slope value itself, anchored at the first data point.

Figures are fixed-size Agg renders with a pinned svg hash salt and no
embedded dates; repeated renders of the same spec are byte-identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import read_bands, read_ledger, read_norm_series

PLOT_KINDS = ("loglog_decay", "premultiplied", "energy_overlay", "dyadic_bars")

matplotlib.rcParams.update(
    {
        "figure.figsize": (6.0, 4.0),
        "figure.dpi": 110,
        "savefig.dpi": 110,
        "font.family": "DejaVu Sans",
        "svg.hashsalt": "cnls-plots",
    }
)


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    guide_slopes: tuple[float, ...] = ()
    premultiply_exponent: float = 0.0
    title: str = ""

    def __post_init__(self) -> None:
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"kind must be one of {PLOT_KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


@dataclass
class RenderResult:
    spec: PlotSpec
    files: list[str]
    arrays: dict[str, np.ndarray]
    digests: dict[str, str] = field(init=False)
    guide_slopes: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        self.digests = {name: array_digest(arr) for name, arr in self.arrays.items()}


def array_digest(values: np.ndarray) -> str:
    data = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    return hashlib.sha256(data.tobytes()).hexdigest()


def _finish(fig, ax, spec: PlotSpec, arrays: dict[str, np.ndarray], guides=()) -> RenderResult:
    if spec.title:
        ax.set_title(spec.title)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    base = out.with_suffix("")
    files = []
    for ext in (".png", ".svg"):
        target = base.with_suffix(ext)
        fig.savefig(target, metadata={"Date": None} if ext == ".svg" else None)
        files.append(str(target))
    plt.close(fig)
    result = RenderResult(spec=spec, files=files, arrays=arrays, guide_slopes=tuple(guides))
    digest_path = base.parent / (base.name + ".digest.txt")
    with open(digest_path, "w") as fh:
        for name in sorted(result.digests):
            fh.write(f"{name} sha256={result.digests[name]}\n")
        for slope in result.guide_slopes:
            fh.write(f"guide_slope = {slope!r}\n")
    files.append(str(digest_path))
    return result


def _render_loglog(spec: PlotSpec) -> RenderResult:
    fig, ax = plt.subplots()
    arrays: dict[str, np.ndarray] = {}
    anchor = None
    for path in spec.inputs:
        cols = read_norm_series(path)
        t, v = cols["t"], cols["value"]
        label = Path(path).stem
        arrays[f"{label}.x"] = t
        arrays[f"{label}.y"] = v
        ax.loglog(t, v, marker="o", markersize=3, linewidth=1.0, label=label)
        if anchor is None and t.size and v.size and v[0] > 0:
            anchor = (t[0], v[0], t[-1])
    for slope in spec.guide_slopes:
        if anchor is None:
            break
        t0, v0, t1 = anchor
        ts = np.array([t0, t1])
        ax.loglog(ts, v0 * (ts / t0) ** slope, linestyle="--", linewidth=0.8, color="0.4",
                  label=f"slope {slope:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm value")
    ax.legend(fontsize=8)
    return _finish(fig, ax, spec, arrays, spec.guide_slopes)


def _render_premultiplied(spec: PlotSpec) -> RenderResult:
    fig, ax = plt.subplots()
    arrays: dict[str, np.ndarray] = {}
    r = spec.premultiply_exponent
    for path in spec.inputs:
        cols = read_norm_series(path)
        t, v = cols["t"], cols["value"]
        label = Path(path).stem
        y = t**r * v
        arrays[f"{label}.x"] = t
        arrays[f"{label}.y"] = y
        ax.plot(t, y, marker="o", markersize=3, linewidth=1.0, label=f"t^{r:g} * {label}")
    ax.set_xlabel("t")
    ax.set_ylabel("premultiplied value")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)
    return _finish(fig, ax, spec, arrays)


def _render_energy_overlay(spec: PlotSpec) -> RenderResult:
    if len(spec.inputs) != 1:
        raise ValueError("energy_overlay takes exactly one ledger CSV")
    cols = read_ledger(spec.inputs[0])
    t, e, mod_e = cols["t"], cols["E"], cols["modE"]
    fig, ax = plt.subplots()
    ax.plot(t, e, linewidth=1.2, label="E")
    ax.plot(t, mod_e, linewidth=1.2, label="modified E")
    ax.fill_between(t, e, mod_e, alpha=0.25, linewidth=0, label="corrections")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    arrays = {"ledger.t": t, "ledger.E": e, "ledger.modE": mod_e}
    return _finish(fig, ax, spec, arrays)


def _render_dyadic_bars(spec: PlotSpec) -> RenderResult:
    if len(spec.inputs) != 1:
        raise ValueError("dyadic_bars takes exactly one bands CSV")
    cols = read_bands(spec.inputs[0])
    j, s = cols["j"], cols["weighted_l1l2"]
    fig, ax = plt.subplots()
    ax.bar(j, s, width=0.8)
    ax.set_xlabel("dyadic index j")
    ax.set_ylabel("weighted band mass")
    arrays = {"bands.x": j, "bands.y": s}
    return _finish(fig, ax, spec, arrays)


_RENDERERS = {
    "loglog_decay": _render_loglog,
    "premultiplied": _render_premultiplied,
    "energy_overlay": _render_energy_overlay,
    "dyadic_bars": _render_dyadic_bars,
}


def render(spec: PlotSpec) -> RenderResult:
    """Render one figure (PNG and SVG) plus its digest sidecar."""
    return _RENDERERS[spec.kind](spec)
