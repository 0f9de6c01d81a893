"""CSV, JSON and SVG outputs for sweep results.

All files are UTF-8 with LF line endings. Fractions are written with six
decimals in summaries and at full precision in the per-simulation dump.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import CellResult, group_sort_key, ordered_results, summary_rows
from .metrics import integration_grid, to_percent
from .scenarios import get_scenario

SUMMARY_HEADER = ("scenario", "design", "method", "total_n", "n_sims", "min", "p5", "median",
                  "p95", "max", "mean", "converged", "ridged")
FRACTION_FIELDS = ("min", "p5", "median", "p95", "max", "mean")
PERSIM_HEADER = ("method", "design", "total_n", "scenario", "sim_index", "sabc")
UNSTABLE_P95 = 0.25


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def format_summary_csv(rows) -> str:
    out = io.StringIO()
    out.write(",".join(SUMMARY_HEADER) + "\n")
    for row in rows:
        fields = [f"{row[k]:.6f}" if k in FRACTION_FIELDS else str(row[k]) for k in SUMMARY_HEADER]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def emit_summary_csv(results: list[CellResult], path) -> Path:
    if not results:
        raise ValueError("no results to write")
    return _write_text(path, format_summary_csv(summary_rows(results)))


def emit_persim_csv(results: list[CellResult], path) -> Path:
    out = io.StringIO()
    out.write(",".join(PERSIM_HEADER) + "\n")
    for r in ordered_results(results):
        c = r.cell
        prefix = f"{c.method},{c.design_label},{c.total_n},{c.scenario_id}"
        for i, v in enumerate(r.per_sim_sabc):
            out.write(f"{prefix},{i},{float(v)!r}\n")
    return _write_text(path, out.getvalue())


def read_persim_csv(path) -> dict[tuple, np.ndarray]:
    """Per-simulation values keyed by ``(method, design, total_n, scenario)``."""
    groups: dict[tuple, list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            method, design, total_n, scenario, _, value = line.rstrip("\n").split(",")
            groups.setdefault((method, design, int(total_n), scenario), []).append(float(value))
    return {k: np.array(v) for k, v in groups.items()}


def cell_stem(result: CellResult) -> str:
    c = result.cell
    return f"{c.method}_{c.design_label}_N{c.total_n}_s{c.scenario_id}"


def emit_curve_dump(result: CellResult, path, step: float = 0.01) -> Path:
    """Truth plus the stored replicate curves on the integration grid."""
    grid = integration_grid(step=step)
    truth = get_scenario(result.cell.scenario_id)(grid)
    curves = result.curves if result.curves is not None else np.empty((0, grid.size))
    out = io.StringIO()
    out.write(",".join(["D", "truth"] + [f"sim_{i}" for i in range(len(curves))]) + "\n")
    for j, d in enumerate(grid):
        vals = [f"{d:.10g}", f"{truth[j]:.6f}"] + [f"{c[j]:.6f}" for c in curves]
        out.write(",".join(vals) + "\n")
    return _write_text(path, out.getvalue())


def write_metadata(results: list[CellResult], path, extra: dict | None = None) -> Path:
    payload = {"run": extra or {}, "cells": [r.metadata for r in ordered_results(results)]}
    return _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- SVG ---------------------------------------------------------------------

W, H = 480, 320
LEFT, RIGHT, TOP, BOTTOM = 50, 15, 30, 40


def _sx(d, lo=10.0, hi=20.0):
    return LEFT + (d - lo) / (hi - lo) * (W - LEFT - RIGHT)


def _sy(p, lo=0.0, hi=1.0):
    return H - BOTTOM - (p - lo) / (hi - lo) * (H - TOP - BOTTOM)


def _axes(title, ylabel, xticks, yticks, ylo=0.0, yhi=1.0):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
    ]
    for x, label in xticks:
        parts.append(f'<text x="{x:.2f}" y="{H - BOTTOM + 15}" text-anchor="middle" '
                     f'font-size="10">{escape(label)}</text>')
    for v in yticks:
        y = _sy(v, ylo, yhi)
        parts.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{LEFT - 6}" y="{y + 3:.2f}" text-anchor="end" '
                     f'font-size="10">{v:g}</text>')
    parts.append(f'<text x="12" y="{H / 2}" font-size="11" '
                 f'transform="rotate(-90 12 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    return parts


def _polyline(xs, ys, colour, width, opacity=1.0, cls="curve"):
    pts = " ".join(f"{_sx(x):.2f},{_sy(y):.2f}" for x, y in zip(xs, ys))
    return (f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{colour}" '
            f'stroke-width="{width}" stroke-opacity="{opacity}"/>')


def svg_cell_plot(result: CellResult, step: float = 0.01, thin: int = 10) -> str:
    """Sampled prediction curves (red) over the true curve (black) on [10, 20] x [0, 1]."""
    grid = integration_grid(step=step)
    idx = np.unique(np.r_[np.arange(0, grid.size, thin), grid.size - 1])
    xs = grid[idx]
    truth = get_scenario(result.cell.scenario_id)(xs)
    c = result.cell
    parts = _axes(f"Scenario {c.scenario_id}, {c.method}, {c.design_label}, N={c.total_n}",
                  "P(cure)", [(_sx(d), f"{d:g}") for d in range(10, 21, 2)],
                  [0, 0.25, 0.5, 0.75, 1.0])
    curves = result.curves if result.curves is not None else []
    for curve in curves:
        parts.append(_polyline(xs, np.asarray(curve)[idx], "red", 0.7, 0.3))
    parts.append(_polyline(xs, truth, "black", 2, cls="truth"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_boxplot(results: list[CellResult], title: str = "sABC by group") -> str:
    """Box-and-whisker summary (5th/25th/50th/75th/95th percentiles) per group."""
    groups: dict[tuple, list[np.ndarray]] = {}
    for r in results:
        groups.setdefault(r.cell.group, []).append(r.per_sim_sabc)
    keys = sorted(groups, key=group_sort_key)
    pooled = [np.concatenate(groups[k]) for k in keys]
    yhi = max(0.1, float(np.ceil(max(np.percentile(v, 95) for v in pooled) * 20) / 20))
    n = len(keys)
    slot = (W - LEFT - RIGHT) / n
    xticks = [(LEFT + slot * (i + 0.5), f"{k[0]} {k[1]} {k[2]}") for i, k in enumerate(keys)]
    parts = _axes(title, "sABC", xticks, np.linspace(0, yhi, 5).round(3), 0.0, yhi)
    for i, v in enumerate(pooled):
        q5, q25, q50, q75, q95 = np.percentile(v, [5, 25, 50, 75, 95])
        x = LEFT + slot * (i + 0.5)
        half = min(20.0, slot * 0.3)
        y = [_sy(min(q, yhi), 0.0, yhi) for q in (q5, q25, q50, q75, q95)]
        parts.append(f'<g class="box"><line x1="{x:.2f}" y1="{y[0]:.2f}" x2="{x:.2f}" '
                     f'y2="{y[4]:.2f}" stroke="black"/>'
                     f'<rect x="{x - half:.2f}" y="{y[3]:.2f}" width="{2 * half:.2f}" '
                     f'height="{y[1] - y[3]:.2f}" fill="lightgrey" stroke="black"/>'
                     f'<line x1="{x - half:.2f}" y1="{y[2]:.2f}" x2="{x + half:.2f}" '
                     f'y2="{y[2]:.2f}" stroke="black" stroke-width="2"/></g>')
    ref = _sy(0.05, 0.0, yhi)
    parts.append(f'<line x1="{LEFT}" y1="{ref:.2f}" x2="{W - RIGHT}" y2="{ref:.2f}" '
                 f'stroke="red" stroke-dasharray="4 3"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg_plots(results: list[CellResult], out_dir, step: float = 0.01) -> list[Path]:
    out_dir = Path(out_dir)
    paths = [_write_text(out_dir / f"{cell_stem(r)}.svg", svg_cell_plot(r, step))
             for r in ordered_results(results)]
    paths.append(_write_text(out_dir / "sweep_boxplot.svg", svg_boxplot(results)))
    return paths


# -- console report ------------------------------------------------------------

def render_report(rows) -> str:
    """Per-group p95 table in percent, flagging groups with unstable fits."""
    lines = []
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["method"], row["design"], row["total_n"]), []).append(row)
    for (method, design, total_n), members in groups.items():
        lines.append(f"{method} / {design} / N={total_n}")
        lines.append("  scenario   median%    p95%     max%   ridged")
        unstable = 0
        for row in members:
            flag = ""
            if row["scenario"] != "Overall" and row["p95"] > UNSTABLE_P95:
                flag = "  unstable"
                unstable += 1
            lines.append(f"  {row['scenario']:>8} {to_percent(row['median']):8.2f} "
                         f"{to_percent(row['p95']):8.2f} {to_percent(row['max']):8.2f} "
                         f"{row['ridged']:7d}{flag}")
        if unstable:
            n_scen = sum(1 for r in members if r["scenario"] != "Overall")
            lines.append(f"  WARNING: p95 sABC above {UNSTABLE_P95:g} in {unstable} of "
                         f"{n_scen} scenarios")
    return "\n".join(lines) + "\n"
