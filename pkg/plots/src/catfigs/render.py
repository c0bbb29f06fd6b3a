"""Turn catamp CSV tables into figures; no physics is recomputed here.

Each figure id names its input CSVs (produced by the catamp CLI), a panel
layout and a style. Rendering is deterministic: identical input bytes
produce identical image bytes, and every image carries the sha256 of its
inputs both as PNG metadata and in a visible footer, so a figure can
always be traced back to the data it was drawn from.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SUPPORTED_SCHEMA = 1
DPI = 150

# sequential for densities and fidelities, diverging for Wigner values
HEATMAP_CMAP = "viridis"
WIGNER_CMAP = "RdBu_r"


class RenderError(ValueError):
    """Input table is missing, malformed or from an unknown schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: id, input tables, style knobs and output path."""

    figure_id: str
    inputs: tuple
    out_path: Path
    style: dict = field(default_factory=dict)


def _read_table(path: Path, required_columns) -> dict:
    if not path.exists():
        raise RenderError(f"input table {path} does not exist")
    meta_path = path.with_name(path.name + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        version = meta.get("schema_version")
        if version != SUPPORTED_SCHEMA:
            raise RenderError(
                f"{path}: schema version {version!r}, supported {SUPPORTED_SCHEMA}"
            )
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"{path}: empty table") from None
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path}: header only, no data rows")
    missing = [c for c in required_columns if c not in header]
    if missing:
        raise RenderError(f"{path}: missing columns {missing}")
    table = {}
    data = np.asarray(rows, dtype=object)
    for column in header:
        idx = header.index(column)
        col = data[:, idx]
        try:
            table[column] = col.astype(float)
        except ValueError:
            table[column] = col.astype(str)
    return table


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _finish(fig, spec: FigureSpec) -> Path:
    hashes = {p.name: _hash_file(p) for p in spec.inputs}
    footer = "  ".join(f"{name} {digest[:12]}" for name, digest in sorted(hashes.items()))
    fig.text(0.005, 0.005, f"sources: {footer}", fontsize=4, family="monospace")
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {f"source:{name}": digest for name, digest in hashes.items()}
    metadata["figure-id"] = spec.figure_id
    fig.savefig(spec.out_path, dpi=DPI, metadata=metadata)
    plt.close(fig)
    return spec.out_path


def _render_curve_panels(spec: FigureSpec) -> Path:
    table = _read_table(spec.inputs[0], ("alpha", "x", "vacuum", "combination"))
    alphas = sorted(set(table["alpha"]))
    if len(alphas) != 4:
        raise RenderError(
            f"{spec.figure_id} wants a 2x2 grid of four amplitudes, "
            f"table holds {len(alphas)}"
        )
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True, sharey=True)
    for ax, alpha in zip(axes.ravel(), alphas):
        mask = table["alpha"] == alpha
        ax.plot(table["x"][mask], table["vacuum"][mask], "-", lw=1.4, label="vacuum")
        ax.plot(table["x"][mask], table["combination"][mask], "--", lw=1.4,
                label="superposition")
        ax.set_title(f"amplitude {alpha:g}", fontsize=9)
        ax.axhline(0.0, color="0.85", lw=0.6, zorder=0)
    axes[0, 0].legend(fontsize=7, frameon=False)
    for ax in axes[1, :]:
        ax.set_xlabel("x")
    fig.suptitle(spec.style.get("title", "quadrature wavefunctions"), fontsize=11)
    fig.tight_layout()
    return _finish(fig, spec)


def _grid_from_long(table, xcol, ycol, vcol):
    xs = np.array(sorted(set(table[xcol])))
    ys = np.array(sorted(set(table[ycol])))
    lookup = {(x, y): v for x, y, v in zip(table[xcol], table[ycol], table[vcol])}
    grid = np.empty((len(ys), len(xs)))
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            try:
                grid[i, j] = lookup[(x, y)]
            except KeyError:
                raise RenderError(
                    f"table is not a complete ({xcol}, {ycol}) grid: "
                    f"missing ({x:g}, {y:g})"
                ) from None
    return xs, ys, grid


def _render_heatmap_pair(spec: FigureSpec) -> Path:
    table = _read_table(spec.inputs[0], ("alpha", "x0", "fidelity", "density"))
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharey=True)
    for ax, column, label in zip(axes, ("fidelity", "density"), ("(a) fidelity", "(b) density")):
        xs, ys, grid = _grid_from_long(table, "alpha", "x0", column)
        image = ax.pcolormesh(xs, ys, grid, cmap=HEATMAP_CMAP, shading="nearest")
        fig.colorbar(image, ax=ax, shrink=0.9)
        ax.set_xlabel("input amplitude")
        ax.set_title(label, fontsize=9)
    axes[0].set_ylabel("homodyne outcome")
    fig.suptitle(spec.style.get("title", "heralded fidelity and outcome density"),
                 fontsize=11)
    fig.tight_layout()
    return _finish(fig, spec)


def _render_success_panels(spec: FigureSpec) -> Path:
    if len(spec.inputs) != 3:
        raise RenderError(f"{spec.figure_id} wants three loss panels, got {len(spec.inputs)}")
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2), sharey=True)
    for ax, path, tag in zip(axes, spec.inputs, ("(a)", "(b)", "(c)")):
        table = _read_table(path, ("alpha", "target", "loss", "probability", "window"))
        loss = table["loss"][0]
        for target in sorted(set(table["target"])):
            mask = table["target"] == target
            ax.plot(table["alpha"][mask], table["probability"][mask],
                    marker="o", ms=2.5, lw=1.2, label=f"target {target:g}")
        ax.set_xlabel("input amplitude")
        ax.set_title(f"{tag} loss {loss:g}", fontsize=9)
    axes[0].set_ylabel("success probability")
    axes[0].legend(fontsize=7, frameon=False)
    fig.suptitle(spec.style.get("title", "probability of reaching target fidelity"),
                 fontsize=11)
    fig.tight_layout()
    return _finish(fig, spec)


def _render_wigner_pair(spec: FigureSpec) -> Path:
    table = _read_table(spec.inputs[0], ("state", "x", "p", "wigner"))
    wanted = spec.style.get("states", ("input-odd", "amplified"))
    present = set(table["state"])
    missing = [s for s in wanted if s not in present]
    if missing:
        raise RenderError(f"{spec.inputs[0]}: missing states {missing}")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.8))
    for ax, name in zip(axes, wanted):
        mask = table["state"] == name
        sub = {k: v[mask] for k, v in table.items() if k != "state"}
        xs, ys, grid = _grid_from_long(sub, "x", "p", "wigner")
        bound = float(np.abs(grid).max())
        image = ax.pcolormesh(xs, ys, grid, cmap=WIGNER_CMAP,
                              vmin=-bound, vmax=bound, shading="nearest")
        fig.colorbar(image, ax=ax, shrink=0.9)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        ax.set_title(name, fontsize=9)
        ax.set_aspect("equal")
    fig.suptitle(spec.style.get("title", "Wigner functions"), fontsize=11)
    fig.tight_layout()
    return _finish(fig, spec)


FIGURES = {
    "fig2": (("curves_same_parity.csv",), _render_curve_panels,
             {"title": "vacuum against the even superposition"}),
    "fig3": (("sweep_same_parity.csv",), _render_heatmap_pair,
             {"title": "same-parity inputs: fidelity and density"}),
    "fig4": (("success_same_parity_loss00.csv",
              "success_same_parity_loss10.csv",
              "success_same_parity_loss20.csv"), _render_success_panels,
             {"title": "same-parity inputs: success probability"}),
    "fig5": (("curves_opposite_parity.csv",), _render_curve_panels,
             {"title": "vacuum against the odd superposition"}),
    "fig6": (("sweep_opposite_parity.csv",), _render_heatmap_pair,
             {"title": "opposite-parity inputs: fidelity and density"}),
    "fig7": (("success_opposite_parity_loss00.csv",
              "success_opposite_parity_loss10.csv",
              "success_opposite_parity_loss20.csv"), _render_success_panels,
             {"title": "opposite-parity inputs: success probability"}),
    "fig8": (("wigner_opposite_parity.csv",), _render_wigner_pair,
             {"title": "input and amplified Wigner functions"}),
}

FIGURE_IDS = tuple(FIGURES)


def make_spec(figure_id: str, data_dir, out_dir) -> FigureSpec:
    if figure_id not in FIGURES:
        raise RenderError(f"unknown figure id {figure_id!r}; known: {FIGURE_IDS}")
    filenames, _, style = FIGURES[figure_id]
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    return FigureSpec(
        figure_id=figure_id,
        inputs=tuple(data_dir / name for name in filenames),
        out_path=out_dir / f"{figure_id}.png",
        style=dict(style),
    )


def render(spec: FigureSpec) -> Path:
    """Render one figure spec to its output image path."""
    _, renderer, _ = FIGURES[spec.figure_id]
    return renderer(spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="catfigs",
        description="Render figures from catamp CSV exports.",
    )
    parser.add_argument("figure", help="figure id (fig2..fig8) or 'all'")
    parser.add_argument("--data-dir", required=True)
    parser.add_argument("--out-dir", required=True)
    args = parser.parse_args(argv)
    ids = FIGURE_IDS if args.figure == "all" else (args.figure,)
    try:
        for figure_id in ids:
            path = render(make_spec(figure_id, args.data_dir, args.out_dir))
            print(path)
    except RenderError as exc:
        print(f"catfigs: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
