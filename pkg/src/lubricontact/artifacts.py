"""Run artifact emission: CSV tables, JSON summaries, hand-rolled SVG plots.

All numbers are written with ``repr(float(x))`` so that parse-back is
bit-exact and repeated runs of a deterministic solve produce identical
bytes.  Wall-clock timing goes only into the JSON summary, never into a
CSV.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

__all__ = [
    "STEPS_HEADER",
    "PROFILE_HEADER",
    "STRIBECK_HEADER",
    "fmt",
    "write_csv",
    "read_csv",
    "write_summary",
    "line_plot_svg",
]

STEPS_HEADER = [
    "time",
    "friction_coefficient",
    "normal_load",
    "min_film",
    "max_fluid_pressure",
    "max_contact_pressure",
]
PROFILE_HEADER = ["node", "x", "y", "gap", "film", "fluid_pressure", "contact_pressure"]
STRIBECK_HEADER = [
    "u_eta",
    "sliding_velocity",
    "friction_coefficient",
    "normal_load",
    "min_film",
    "max_fluid_pressure",
    "max_contact_pressure",
    "steps",
]


def fmt(x) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value in artifact: {v!r}")
    return repr(v)


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match header")
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path: str):
    """Returns (header, rows) with every cell parsed back to float."""
    with open(path) as f:
        lines = [ln for ln in f.read().splitlines() if ln]
    header = lines[0].split(",")
    rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
    return header, rows


def write_summary(path: str, summary: dict) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    vals = []
    v = start
    while v <= hi + 1e-9 * step:
        vals.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return vals


def line_plot_svg(
    path: str,
    series,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
) -> None:
    """Minimal line plot: ``series`` is a list of (label, xs, ys) triples."""
    width, height = 720.0, 460.0
    ml, mr, mt, mb = 75.0, 20.0, 35.0, 55.0
    pw, ph = width - ml - mr, height - mt - mb

    xs_all, ys_all = [], []
    for _, xs, ys in series:
        xs_all.extend(float(x) for x in xs)
        ys_all.extend(float(y) for y in ys)
    if not xs_all:
        raise ValueError("nothing to plot")

    def xt(x):
        return math.log10(x) if logx else x

    x_lo, x_hi = min(map(xt, xs_all)), max(map(xt, xs_all))
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def px(x):
        return ml + (xt(x) - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return mt + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:g} {height:g}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
        f'<rect x="{ml:g}" y="{mt:g}" width="{pw:g}" height="{ph:g}" '
        'fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:g}" y="20" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )

    if logx:
        lo_e, hi_e = math.floor(x_lo), math.ceil(x_hi)
        xticks = [10.0 ** e for e in range(int(lo_e), int(hi_e) + 1) if x_lo <= e <= x_hi]
        xlabels = [f"1e{int(math.log10(v))}" for v in xticks]
    else:
        xticks = _ticks(x_lo, x_hi)
        xlabels = [f"{v:g}" for v in xticks]
    for v, lab in zip(xticks, xlabels):
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph:g}" x2="{x:.2f}" y2="{mt + ph + 5:g}" stroke="#444"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 18:g}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y_lo, y_hi):
        y = py(v)
        out.append(f'<line x1="{ml - 5:g}" y1="{y:.2f}" x2="{ml:g}" y2="{y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{ml - 8:g}" y="{y + 4:.2f}" text-anchor="end">{v:g}</text>')
    out.append(
        f'<text x="{ml + pw / 2:g}" y="{height - 12:g}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{mt + ph / 2:g}" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + ph / 2:g})">{ylabel}</text>'
    )

    for i, (label, xs, ys) in enumerate(series):
        color = colors[i % len(colors)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = mt + 16 + 16 * i
            out.append(
                f'<line x1="{ml + pw - 130:g}" y1="{ly:g}" x2="{ml + pw - 105:g}" '
                f'y2="{ly:g}" stroke="{color}" stroke-width="1.5"/>'
            )
            out.append(f'<text x="{ml + pw - 100:g}" y="{ly + 4:g}">{label}</text>')

    out.append("</svg>")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(out) + "\n")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
