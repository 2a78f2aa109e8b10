"""Figure rendering from doublon-ed result bundles and density CSVs.

Read-only over its inputs. Every render also writes `<output>.legend.json`
describing the drawn series (class names, colors, counts) so downstream
tooling can verify the visual encoding without parsing pixels.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA_VERSION = 1

CLASS_STYLE = {
    "scattering": {"color": "#fbceb1", "marker": ".", "size": 6, "zorder": 1},
    "doublon_bulk": {"color": "#1f4e9c", "marker": "o", "size": 14, "zorder": 2},
    "in_gap_edge": {"color": "#2a9d8f", "marker": "D", "size": 22, "zorder": 3},
    "in_gap_corner": {"color": "#d62828", "marker": "*", "size": 60, "zorder": 4},
}
UNCLASSIFIED = {"color": "#888888", "marker": ".", "size": 6, "zorder": 1}


class FigureError(Exception):
    """Bad figure spec, missing input, or schema mismatch."""


def load_spec(path) -> dict:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise FigureError(f"cannot read figure spec: {exc}")
    except json.JSONDecodeError as exc:
        raise FigureError(f"figure spec is not valid JSON: {exc}")
    for key in ("kind", "input", "output"):
        if key not in spec:
            raise FigureError(f"figure spec missing required field {key!r}")
    if spec.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise FigureError(f"unsupported figure spec schema_version {spec['schema_version']}")
    if spec["kind"] not in ("spectrum", "heatmap", "scaling", "sweep"):
        raise FigureError(f"unknown figure kind {spec['kind']!r}")
    return spec


def _load_bundle(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise FigureError(f"cannot read result bundle: {exc}")
    except json.JSONDecodeError as exc:
        raise FigureError(f"result bundle is not valid JSON: {exc}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FigureError(f"result bundle schema_version {doc.get('schema_version')!r} "
                          f"does not match renderer schema {SCHEMA_VERSION}")
    return doc


def _write_legend(output, entries):
    meta = {"schema_version": SCHEMA_VERSION, "legend": entries}
    with open(str(output) + ".legend.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _save(fig, spec):
    output = Path(spec["output"])
    output.parent.mkdir(parents=True, exist_ok=True)
    fmt = spec.get("format") or (output.suffix.lstrip(".") or "png")
    if fmt not in ("png", "svg"):
        raise FigureError(f"unsupported output format {fmt!r}")
    fig.savefig(output, format=fmt, dpi=150)
    plt.close(fig)
    return output


def render_spectrum(spec) -> Path:
    doc = _load_bundle(spec["input"])
    spectra = doc.get("spectra", [])
    records = doc.get("records", [])
    labels = {r["index"]: r["class"] for r in records}
    fig, ax = plt.subplots(figsize=(6, 4.5))
    by_class = {}
    for idx, pair in enumerate(spectra):
        by_class.setdefault(labels.get(idx, "unclassified"), []).append(pair)
    entries = []
    for cls, pairs in sorted(by_class.items()):
        style = CLASS_STYLE.get(cls, UNCLASSIFIED)
        arr = np.asarray(pairs, dtype=float)
        ax.scatter(arr[:, 0], arr[:, 1], s=style["size"], c=style["color"],
                   marker=style["marker"], zorder=style["zorder"], label=cls,
                   linewidths=0)
        entries.append({"class": cls, "color": style["color"], "marker": style["marker"],
                        "count": len(pairs)})
    gap = (doc.get("data") or {}).get("gap_window")
    if gap:
        ax.axvspan(gap["re_lo"], gap["re_hi"], color="#eeeeee", zorder=0)
    ax.set_xlabel("Re E / J")
    ax.set_ylabel("Im E / J")
    ax.set_title(spec.get("style", {}).get("title", "complex spectrum"))
    if entries:
        ax.legend(loc="upper right", fontsize=8)
    out = _save(fig, spec)
    _write_legend(out, entries)
    return out


def _read_grid(path):
    xs, ys, vs = [], [], []
    try:
        with open(path) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["x", "y", "value"]:
                raise FigureError(f"unexpected grid header {header}")
            for row in reader:
                xs.append(int(row[0]))
                ys.append(int(row[1]))
                vs.append(float(row[2]))
    except OSError as exc:
        raise FigureError(f"cannot read grid CSV: {exc}")
    if not xs:
        raise FigureError("grid CSV holds no data rows")
    Lx, Ly = max(xs), max(ys)
    grid = np.zeros((Lx, Ly))
    for x, y, v in zip(xs, ys, vs):
        grid[x - 1, y - 1] = v
    return grid


def render_heatmap(spec) -> Path:
    grid = _read_grid(spec["input"])
    fig, ax = plt.subplots(figsize=(5, 4.5))
    cmap = spec.get("style", {}).get("cmap", "inferno")
    mesh = ax.imshow(grid.T, origin="lower", cmap=cmap, aspect="equal",
                     extent=(0.5, grid.shape[0] + 0.5, 0.5, grid.shape[1] + 0.5))
    fig.colorbar(mesh, ax=ax, label=spec.get("style", {}).get("label", "density"))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(spec.get("style", {}).get("title", "site-resolved density"))
    out = _save(fig, spec)
    _write_legend(out, [{"kind": "heatmap", "cmap": cmap,
                         "vmin": float(grid.min()), "vmax": float(grid.max())}])
    return out


def render_scaling(spec) -> Path:
    doc = _load_bundle(spec["input"])
    data = doc.get("data", {})
    for key in ("L_y_values", "counts", "slope", "intercept"):
        if key not in data:
            raise FigureError(f"scaling bundle missing data.{key}")
    x = np.asarray(data["L_y_values"], dtype=float)
    y = np.asarray(data["counts"], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, data["slope"] * x + data["intercept"], "-", color="#999999",
            label=f"fit, R^2={data.get('r_squared', float('nan')):.3f}")
    ax.plot(x, y, "o", color="#d62828", label="corner modes")
    ax.set_xlabel("L_y")
    ax.set_ylabel("N_c")
    ax.set_title(spec.get("style", {}).get("title", "corner-mode count vs lattice length"))
    ax.legend()
    out = _save(fig, spec)
    _write_legend(out, [{"series": "counts", "color": "#d62828"},
                        {"series": "fit", "slope": data["slope"],
                         "intercept": data["intercept"]}])
    return out


def render_sweep(spec) -> Path:
    doc = _load_bundle(spec["input"])
    points = doc.get("data", {}).get("points")
    if points is None:
        raise FigureError("sweep bundle missing data.points")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    gap = doc.get("data", {}).get("gap_window")
    if gap:
        ax.axhspan(gap["re_lo"], gap["re_hi"], color="#f2f2f2", zorder=0)
    for pt in points:
        for re in pt.get("in_gap_re", []):
            ax.plot(pt["V"], re, "o", ms=4, color="#1f4e9c", zorder=3)
    ax.set_xlabel("V / J")
    ax.set_ylabel("Re E / J")
    ax.set_title(spec.get("style", {}).get("title", "in-gap states vs edge potential"))
    out = _save(fig, spec)
    _write_legend(out, [{"series": "in_gap_re", "color": "#1f4e9c",
                         "n_points": len(points)}])
    return out


RENDERERS = {
    "spectrum": render_spectrum,
    "heatmap": render_heatmap,
    "scaling": render_scaling,
    "sweep": render_sweep,
}


def render(spec: dict) -> Path:
    return RENDERERS[spec["kind"]](spec)
