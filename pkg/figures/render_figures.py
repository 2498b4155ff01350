"""Render figure analogues of the sweep results from CSV + manifest output.

This package is strictly downstream of the sweep CLI: it reads the manifest
and the CSV files it names, and never recomputes a model quantity - every
plotted value is a value parsed from a CSV cell. Rendering is deterministic
(fixed SVG hash salt, no embedded timestamps), so identical inputs produce
identical image bytes.

Usage:
    debategame-figures --manifest OUT/manifest.json --fig fig4 [--out-dir DIR]
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "debategame-figures"

import matplotlib.pyplot as plt
import numpy as np

SCHEMA_VERSION = "1"

FIGURES = ("fig2", "fig3", "fig4", "fig5", "si-consensus", "si-nscale", "si-selection")

# commands whose CSV each figure consumes
FIGURE_SOURCES = {
    "fig2": "curves",
    "fig3": "curves",
    "fig4": "harmony",
    "fig5": "equilibria",
    "si-consensus": "curves",
    "si-nscale": "equilibria",
    "si-selection": "equilibria",
}

PANEL_TITLES = {
    "A": "A: at least one bold",
    "B": "B: both conservative",
    "C": "C: both refusenik",
    "D": "D: compromising or mixed, none bold",
}

# profiles highlighted in the per-error-level curve comparison
NOTABLE_PROFILES = [
    ("S+S−", "S+S−"),
    ("S+S−", "S+O+"),
    ("S−O−", "S−O−"),
    ("O+O−", "O+O−"),
    ("S+S+", "S+S+"),
]


class FigureError(Exception):
    """Input data is missing, empty, or does not match the schema."""


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    manifest_path: str
    out_dir: str
    dpi: int = 150


def load_manifest(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise FigureError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise FigureError(f"manifest is not valid JSON: {exc}") from None
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FigureError(
            f"schema version mismatch: manifest has {version!r}, expected {SCHEMA_VERSION!r}"
        )
    return manifest


def load_rows(spec: FigureSpec, manifest: dict) -> list[dict]:
    command = FIGURE_SOURCES[spec.figure]
    entry = manifest.get("commands", {}).get(command)
    if entry is None:
        raise FigureError(f"manifest has no {command!r} output (needed by {spec.figure})")
    csv_files = [f["name"] for f in entry.get("files", []) if f["name"].endswith(".csv")]
    if not csv_files:
        raise FigureError(f"manifest lists no CSV file for {command!r}")
    path = os.path.join(os.path.dirname(os.path.abspath(spec.manifest_path)), csv_files[0])
    if not os.path.exists(path):
        raise FigureError(f"data file missing: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path} is empty") from None
        rows = [dict(zip(header, row)) for row in reader]
    if not rows:
        raise FigureError(f"{path} contains a header but no rows")
    return rows


def require_columns(rows: list[dict], columns: tuple[str, ...], source: str) -> None:
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise FigureError(f"{source} is missing columns: {', '.join(missing)}")


def _profile(row: dict) -> str:
    return f"({row['strategy1']},{row['strategy2']})"


def _curve_series(rows: list[dict], value_column: str):
    """Group curve rows into {(alpha, panel, profile): (ts, values)}."""
    series: dict[tuple, tuple[list, list]] = {}
    for row in rows:
        key = (row["alpha"], row["panel"], _profile(row))
        ts, values = series.setdefault(key, ([], []))
        ts.append(int(row["t"]))
        values.append(float(row[value_column]))
    return series


def build_curve_panels(rows: list[dict], value_column: str, ylabel: str, alpha: str):
    require_columns(
        rows, ("alpha", "panel", "strategy1", "strategy2", "t", value_column), "curves.csv"
    )
    series = _curve_series([r for r in rows if r["alpha"] == alpha], value_column)
    if not series:
        raise FigureError(f"no curve rows at alpha={alpha}")
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True, sharey=True)
    for ax, panel in zip(axes.flat, "ABCD"):
        for (a, p, profile), (ts, values) in sorted(series.items()):
            if p != panel:
                continue
            order = np.argsort(ts)
            ax.plot(np.array(ts)[order], np.array(values)[order],
                    lw=0.8, alpha=0.6, label=profile)
        ax.set_title(PANEL_TITLES[panel], fontsize=9)
        ax.grid(True, alpha=0.25)
    for ax in axes[1]:
        ax.set_xlabel("debate round")
    for ax in axes[:, 0]:
        ax.set_ylabel(ylabel)
    fig.suptitle(f"{ylabel} over debate length (alpha={alpha})")
    fig.tight_layout()
    return fig


def build_fig3(rows: list[dict]):
    require_columns(
        rows, ("alpha", "strategy1", "strategy2", "t", "collective_accuracy"), "curves.csv"
    )
    alphas = sorted({r["alpha"] for r in rows}, key=float)
    profiles = {( r["strategy1"], r["strategy2"]) for r in rows}
    chosen = [p for p in NOTABLE_PROFILES if p in profiles]
    if not chosen:
        chosen = sorted(profiles)[:5]
    fig, axes = plt.subplots(1, len(alphas), figsize=(4 * len(alphas), 3.5),
                             sharey=True, squeeze=False)
    for ax, alpha in zip(axes[0], alphas):
        for s1, s2 in chosen:
            pts = [
                (int(r["t"]), float(r["collective_accuracy"]))
                for r in rows
                if r["alpha"] == alpha and (r["strategy1"], r["strategy2"]) == (s1, s2)
            ]
            pts.sort()
            if pts:
                ax.plot([t for t, _ in pts], [v for _, v in pts], label=f"({s1},{s2})")
        ax.set_title(f"alpha = {alpha}", fontsize=10)
        ax.set_xlabel("debate round")
        ax.grid(True, alpha=0.25)
    axes[0][0].set_ylabel("collective accuracy")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    return fig


def _heatmap_axes(rows: list[dict]):
    deltas = sorted({float(r["delta"]) for r in rows})
    ws = sorted({float(r["w"]) for r in rows})
    return deltas, ws


def build_fig4(rows: list[dict]):
    require_columns(rows, ("delta", "w", "alpha", "harmony"), "harmony.csv")
    alphas = sorted({r["alpha"] for r in rows}, key=float)
    fig, axes = plt.subplots(1, len(alphas), figsize=(5 * len(alphas), 4), squeeze=False)
    for ax, alpha in zip(axes[0], alphas):
        sub = [r for r in rows if r["alpha"] == alpha]
        deltas, ws = _heatmap_axes(sub)
        grid = np.ma.masked_all((len(deltas), len(ws)))
        for r in sub:
            if r["harmony"] == "undefined":
                continue  # stays masked and renders white
            i = deltas.index(float(r["delta"]))
            j = ws.index(float(r["w"]))
            grid[i, j] = float(r["harmony"])
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("white")
        mesh = ax.pcolormesh(
            np.arange(len(ws) + 1), np.arange(len(deltas) + 1), grid,
            cmap=cmap, vmin=-1.0, vmax=1.0,
        )
        ax.set_xticks(np.arange(len(ws)) + 0.5, [f"{w:g}" for w in ws],
                      rotation=90, fontsize=6)
        ax.set_yticks(np.arange(len(deltas)) + 0.5, [f"{d:g}" for d in deltas], fontsize=7)
        ax.set_xlabel("truth weight w")
        ax.set_ylabel("continuation probability delta")
        ax.set_title(f"harmony (alpha = {alpha}); white = undefined", fontsize=9)
        fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    return fig


def _selected_rows(rows: list[dict], criterion: str) -> list[dict]:
    flag = f"selected_{criterion}"
    return [r for r in rows if r.get(flag) == "1"]


REGIME_COLORS = {
    "bold": "#2166ac",
    "bold/compromise": "#67a9cf",
    "bold/conservative/compromise": "#8073ac",
    "conservative": "#fdb863",
    "compromise": "#b2abd2",
    "refusenik": "#b2182b",
}


def _regime_color(label: str) -> str:
    if label in REGIME_COLORS:
        return REGIME_COLORS[label]
    if "conservative" in label:
        return "#e08214"
    if "refusenik" in label:
        return "#d6604d"
    return "#999999"


def build_fig5(rows: list[dict]):
    require_columns(
        rows,
        ("n", "delta", "w", "alpha", "groups", "collective_accuracy",
         "selected_epistemic"),
        "equilibria.csv",
    )
    selected = _selected_rows(rows, "epistemic")
    if not selected:
        raise FigureError("no selected-equilibrium rows in equilibria.csv")
    # one debate size per figure; maps across n belong to si-nscale
    n = min(int(r["n"]) for r in selected)
    selected = [r for r in selected if int(r["n"]) == n]
    alphas = sorted({r["alpha"] for r in selected}, key=float)
    fig, axes = plt.subplots(2, len(alphas), figsize=(5 * len(alphas), 7), squeeze=False)
    for col, alpha in enumerate(alphas):
        sub = [r for r in selected if r["alpha"] == alpha]
        ax = axes[0][col]
        for r in sub:
            ax.scatter(float(r["w"]), float(r["delta"]),
                       c=_regime_color(r["groups"]), s=60, marker="s")
        ax.set_xlabel("truth weight w")
        ax.set_ylabel("delta")
        ax.set_title(f"selected-equilibrium regime (alpha = {alpha})", fontsize=9)
        ax = axes[1][col]
        for delta in sorted({r["delta"] for r in sub}, key=float):
            pts = sorted(
                ((float(r["w"]), float(r["collective_accuracy"]))
                 for r in sub if r["delta"] == delta)
            )
            ax.plot([w for w, _ in pts], [v for _, v in pts],
                    marker=".", label=f"delta={float(delta):g}")
        ax.set_xlabel("truth weight w")
        ax.set_ylabel("collective accuracy (normalized)")
        ax.grid(True, alpha=0.25)
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def build_si_nscale(rows: list[dict]):
    require_columns(
        rows, ("n", "delta", "w", "groups", "selected_epistemic"), "equilibria.csv"
    )
    selected = _selected_rows(rows, "epistemic")
    if not selected:
        raise FigureError("no selected-equilibrium rows in equilibria.csv")
    ns = sorted({int(r["n"]) for r in selected})
    fig, axes = plt.subplots(1, len(ns), figsize=(5 * len(ns), 4), squeeze=False)
    for ax, n in zip(axes[0], ns):
        sub = [r for r in selected if int(r["n"]) == n]
        for r in sub:
            ax.scatter(float(r["w"]), float(r["delta"]),
                       c=_regime_color(r["groups"]), s=60, marker="s")
        ax.set_xlabel("truth weight w")
        ax.set_ylabel("delta")
        ax.set_title(f"n = {n}", fontsize=10)
    fig.tight_layout()
    return fig


def build_si_selection(rows: list[dict]):
    require_columns(
        rows,
        ("n", "delta", "w", "alpha", "collective_accuracy",
         "selected_epistemic", "selected_utilitarian"),
        "equilibria.csv",
    )
    n = min(int(r["n"]) for r in rows)
    rows = [r for r in rows if int(r["n"]) == n]
    deltas = sorted({r["delta"] for r in rows}, key=float)
    fig, axes = plt.subplots(1, len(deltas), figsize=(4 * len(deltas), 3.5),
                             sharey=True, squeeze=False)
    for ax, delta in zip(axes[0], deltas):
        for criterion, style in (("epistemic", "-"), ("utilitarian", "--")):
            pts = sorted(
                ((float(r["w"]), float(r["collective_accuracy"]))
                 for r in _selected_rows(rows, criterion) if r["delta"] == delta)
            )
            ax.plot([w for w, _ in pts], [v for _, v in pts], style,
                    marker=".", label=criterion)
        ax.set_title(f"delta = {float(delta):g}", fontsize=10)
        ax.set_xlabel("truth weight w")
        ax.grid(True, alpha=0.25)
    axes[0][0].set_ylabel("collective accuracy (normalized)")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_figure(spec: FigureSpec, manifest: dict):
    rows = load_rows(spec, manifest)
    if spec.figure == "fig2":
        alphas = sorted({r["alpha"] for r in rows}, key=float)
        return build_curve_panels(rows, "collective_accuracy", "collective accuracy", alphas[0])
    if spec.figure == "si-consensus":
        alphas = sorted({r["alpha"] for r in rows}, key=float)
        return build_curve_panels(rows, "consensus", "consensus", alphas[0])
    if spec.figure == "fig3":
        return build_fig3(rows)
    if spec.figure == "fig4":
        return build_fig4(rows)
    if spec.figure == "fig5":
        return build_fig5(rows)
    if spec.figure == "si-nscale":
        return build_si_nscale(rows)
    if spec.figure == "si-selection":
        return build_si_selection(rows)
    raise FigureError(f"unknown figure id: {spec.figure}")


def render(spec: FigureSpec) -> list[str]:
    """Render one figure to SVG and PNG next to the manifest (or --out-dir)."""
    manifest = load_manifest(spec.manifest_path)
    fig = build_figure(spec, manifest)
    os.makedirs(spec.out_dir, exist_ok=True)
    stem = os.path.join(spec.out_dir, spec.figure.replace("-", "_"))
    paths = []
    for ext, metadata in (("svg", {"Date": None}), ("png", None)):
        path = f"{stem}.{ext}"
        fig.savefig(path, dpi=spec.dpi, metadata=metadata)
        paths.append(path)
    plt.close(fig)
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="debategame-figures",
        description="Render figures from sweep CSV/manifest output.",
    )
    parser.add_argument("--manifest", required=True, help="path to manifest.json")
    parser.add_argument("--fig", required=True, choices=FIGURES, help="figure to render")
    parser.add_argument("--out-dir", default=None,
                        help="output directory (default: alongside the manifest)")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    out_dir = args.out_dir or os.path.dirname(os.path.abspath(args.manifest))
    spec = FigureSpec(figure=args.fig, manifest_path=args.manifest,
                      out_dir=out_dir, dpi=args.dpi)
    try:
        paths = render(spec)
    except FigureError as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
