"""Static SVG radar chart of F1_CTP per modality, one polygon per run."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import read_score_csv

SIZE = 640
RADIUS = 220
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def axis_label(row: Mapping) -> str:
    parts = [row.get("complexity", ""), row.get("modality", ""), row.get("submodality", "")]
    label = "/".join(p for p in parts if p)
    v = str(row.get("verbosity", ""))
    return f"{label} (V{v})" if v not in ("", "0") else label


def _point(cx, cy, r, k, n):
    a = -math.pi / 2 + 2 * math.pi * k / n
    return cx + r * math.cos(a), cy + r * math.sin(a)


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_radar(runs: Mapping[str, Sequence[Mapping]], value: str = "f1_ctp") -> str:
    """SVG text; axes are the union of row labels across runs, in sorted order."""
    if not runs or not any(runs.values()):
        raise ValueError("no score rows to plot")
    axes = sorted({axis_label(r) for rows in runs.values() for r in rows})
    n = len(axes)
    cx = cy = SIZE / 2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE + 24 * len(runs)}" '
        f'viewBox="0 0 {SIZE} {SIZE + 24 * len(runs)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for level in (25, 50, 75, 100):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (_point(cx, cy, RADIUS * level / 100, k, n) for k in range(n)))
        out.append(f'<polygon points="{pts}" fill="none" stroke="#cccccc" stroke-width="1"/>')
    for k, label in enumerate(axes):
        x, y = _point(cx, cy, RADIUS, k, n)
        lx, ly = _point(cx, cy, RADIUS + 18, k, n)
        anchor = "middle" if abs(lx - cx) < 1 else ("start" if lx > cx else "end")
        out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(x)}" y2="{_fmt(y)}" stroke="#999999"/>')
        out.append(f'<text x="{_fmt(lx)}" y="{_fmt(ly)}" font-size="11" font-family="sans-serif" '
                   f'text-anchor="{anchor}">{_escape(label)}</text>')
    for i, (name, rows) in enumerate(runs.items()):
        color = COLORS[i % len(COLORS)]
        vals = {axis_label(r): float(r[value]) for r in rows}
        pts = []
        for k, label in enumerate(axes):
            v = min(max(vals.get(label, 0.0), 0.0), 100.0)
            pts.append(_point(cx, cy, RADIUS * v / 100, k, n))
        poly = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        out.append(f'<polygon class="run" data-run="{_escape(name)}" points="{poly}" fill="{color}" '
                   f'fill-opacity="0.15" stroke="{color}" stroke-width="2"/>')
        ly = SIZE + 24 * i + 8
        out.append(f'<rect class="legend" x="20" y="{ly}" width="14" height="14" fill="{color}"/>')
        out.append(f'<text x="40" y="{ly + 12}" font-size="12" font-family="sans-serif">{_escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def radar(score_csvs: Sequence, out_svg) -> None:
    """Plot every CSV as one run named after its file stem."""
    runs = {}
    for p in score_csvs:
        p = Path(p)
        name = p.stem
        if name in runs:
            name = str(p)
        runs[name] = read_score_csv(p)
    Path(out_svg).write_text(render_radar(runs), encoding="utf-8")
