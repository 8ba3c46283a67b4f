"""Byte-stable result files: results.csv, curves.csv, thresholds.csv, and SVG charts.

results.csv is the normative output (every figure is derivable from it plus
curves.csv); the SVGs are best-effort line charts with +-1 std bands.  All
floats print with repr-exact precision so files round-trip losslessly and
regenerate byte-identically from unchanged inputs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .evaluate import CellResult

RESULTS_HEADER = (
    "scenario,noise,alpha,epsilon,seed,episodes,aborted,mean_fidelity,std_fidelity,"
    "mean_steps_to_threshold,std_steps_to_threshold,unreached_count"
)
CURVES_HEADER = "scenario,noise,alpha,epsilon,t,mean_fidelity"
THRESHOLDS_HEADER = "scenario,noise,epsilon,threshold_alpha"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sorted_cells(results: list[CellResult]) -> list[CellResult]:
    return sorted(results, key=lambda c: c.key())


def render_results_csv(results: list[CellResult]) -> str:
    lines = [RESULTS_HEADER]
    for c in _sorted_cells(results):
        lines.append(
            ",".join(
                [
                    c.scenario,
                    c.noise,
                    _fmt(c.alpha),
                    _fmt(c.epsilon),
                    str(c.seed),
                    str(c.episodes),
                    str(c.aborted),
                    _fmt(c.mean_fidelity),
                    _fmt(c.std_fidelity),
                    _fmt(c.mean_steps_to_threshold),
                    _fmt(c.std_steps_to_threshold),
                    str(c.unreached_count),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_curves_csv(results: list[CellResult]) -> str:
    lines = [CURVES_HEADER]
    for c in _sorted_cells(results):
        for t, value in enumerate(c.fidelity_curve):
            lines.append(
                f"{c.scenario},{c.noise},{_fmt(c.alpha)},{_fmt(c.epsilon)},{t},{_fmt(value)}"
            )
    return "\n".join(lines) + "\n"


def render_thresholds_csv(summary: dict[tuple, float | None]) -> str:
    lines = [THRESHOLDS_HEADER]
    for (scenario, noise, epsilon), alpha in sorted(
        summary.items(), key=lambda kv: kv[0]
    ):
        value = "" if alpha is None else _fmt(alpha)
        lines.append(f"{scenario},{noise},{_fmt(epsilon)},{value}")
    return "\n".join(lines) + "\n"


def parse_results_csv(text: str, curves_text: str | None = None) -> list[CellResult]:
    """Inverse of render_results_csv (+ render_curves_csv when provided)."""
    lines = text.strip().splitlines()
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValueError("results.csv header mismatch")
    curves: dict[tuple, list[float]] = {}
    if curves_text:
        curve_lines = curves_text.strip().splitlines()
        if curve_lines[0] != CURVES_HEADER:
            raise ValueError("curves.csv header mismatch")
        for line in curve_lines[1:]:
            scenario, noise, alpha, epsilon, t, value = line.split(",")
            key = (scenario, noise, float(alpha), float(epsilon))
            curves.setdefault(key, []).append(float(value))
    results = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 12:
            raise ValueError(f"expected 12 columns, got {len(parts)}: {line!r}")
        key = (parts[0], parts[1], float(parts[2]), float(parts[3]))
        results.append(
            CellResult(
                scenario=parts[0],
                noise=parts[1],
                alpha=float(parts[2]),
                epsilon=float(parts[3]),
                seed=int(parts[4]),
                episodes=int(parts[5]),
                aborted=int(parts[6]),
                mean_fidelity=float(parts[7]),
                std_fidelity=float(parts[8]),
                mean_steps_to_threshold=float(parts[9]),
                std_steps_to_threshold=float(parts[10]),
                unreached_count=int(parts[11]),
                fidelity_curve=tuple(curves.get(key, ())),
            )
        )
    return results


# -- minimal SVG line charts --

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 16, 36, 48  # margins


def _x_pos(alpha: float, lo: float, hi: float) -> float:
    span = (hi - lo) or 1.0
    return _ML + (alpha - lo) / span * (_W - _ML - _MR)

def _y_pos(value: float, lo: float, hi: float) -> float:
    span = (hi - lo) or 1.0
    return _H - _MB - (value - lo) / span * (_H - _MT - _MB)


def _svg_chart(title: str, ylabel: str, series: list[dict], y_range: tuple[float, float]) -> str:
    """series: [{label, alphas, means, stds, color}], NaNs dropped per point."""
    alphas_all = [a for s in series for a in s["alphas"]]
    lo_x, hi_x = (min(alphas_all), max(alphas_all)) if alphas_all else (0.0, 1.0)
    lo_y, hi_y = y_range
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.6g}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{_W / 2:.6g}" y="{_H - 12}" text-anchor="middle">noise strength alpha</text>',
        f'<text x="16" y="{_H / 2:.6g}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_H / 2:.6g})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = lo_x + frac * (hi_x - lo_x)
        yv = lo_y + frac * (hi_y - lo_y)
        xp, yp = _x_pos(xv, lo_x, hi_x), _y_pos(yv, lo_y, hi_y)
        parts.append(
            f'<text x="{xp:.6g}" y="{_H - _MB + 16}" text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{yp + 4:.6g}" text-anchor="end">{yv:.3g}</text>'
        )
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        points = [
            (a, m, sd)
            for a, m, sd in zip(s["alphas"], s["means"], s["stds"])
            if math.isfinite(m)
        ]
        if not points:
            continue
        band_up = [
            f"{_x_pos(a, lo_x, hi_x):.6g},{_y_pos(min(m + sd, hi_y), lo_y, hi_y):.6g}"
            for a, m, sd in points
        ]
        band_down = [
            f"{_x_pos(a, lo_x, hi_x):.6g},{_y_pos(max(m - sd, lo_y), lo_y, hi_y):.6g}"
            for a, m, sd in reversed(points)
        ]
        parts.append(
            f'<polygon points="{" ".join(band_up + band_down)}" fill="{color}" '
            f'fill-opacity="0.15" stroke="none"/>'
        )
        line = " ".join(
            f"{_x_pos(a, lo_x, hi_x):.6g},{_y_pos(min(max(m, lo_y), hi_y), lo_y, hi_y):.6g}"
            for a, m, _ in points
        )
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = _MT + 14 * (i + 1)
        parts.append(
            f'<line x1="{_W - _MR - 150}" y1="{ly}" x2="{_W - _MR - 126}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{_W - _MR - 120}" y="{ly + 4}">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _series_for(results: list[CellResult], noise: str, metric: str) -> list[dict]:
    by_curve: dict[tuple, list[CellResult]] = {}
    for c in results:
        if c.noise != noise:
            continue
        by_curve.setdefault((c.scenario, c.epsilon), []).append(c)
    series = []
    for (scenario, epsilon), cells in sorted(by_curve.items()):
        cells = sorted(cells, key=lambda c: c.alpha)
        if metric == "fidelity":
            means = [c.mean_fidelity for c in cells]
            stds = [c.std_fidelity for c in cells]
        else:
            means = [c.mean_steps_to_threshold for c in cells]
            stds = [c.std_steps_to_threshold for c in cells]
        series.append(
            {
                "label": f"{scenario} eps={epsilon:g}",
                "alphas": [c.alpha for c in cells],
                "means": means,
                "stds": stds,
            }
        )
    return series


def emit_report(results: list[CellResult], summary: dict[tuple, float | None], out_dir) -> list[str]:
    """Write the three CSVs plus one SVG per (noise, metric); returns written paths."""
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in [
        ("results.csv", render_results_csv(results)),
        ("curves.csv", render_curves_csv(results)),
        ("thresholds.csv", render_thresholds_csv(summary)),
    ]:
        (out / name).write_text(text)
        written.append(str(out / name))
    noises = sorted({c.noise for c in results})
    horizons = [len(c.fidelity_curve) - 1 for c in results if c.fidelity_curve]
    max_steps = float(max(horizons)) if horizons else 20.0
    for noise in noises:
        for metric, ylabel, y_range in [
            ("fidelity", "mean terminal fidelity", (0.0, 1.0)),
            ("steps", "mean steps to threshold", (0.0, max_steps)),
        ]:
            series = _series_for(results, noise, metric)
            svg = _svg_chart(f"{noise} ({metric})", ylabel, series, y_range)
            path = out / f"{noise}_{metric}.svg"
            path.write_text(svg)
            written.append(str(path))
    return written
