"""CSV / JSON / SVG writers and the CSV reader used for round-trips."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .optics import ScreenGrid, ScreenPattern

FLOAT_FMT = "%.17g"
PALETTE = ("#000000", "#1f4fd1", "#c62828", "#8d5524", "#2e7d32", "#6a1b9a", "#00838f")


def _g(v: float) -> str:
    return FLOAT_FMT % v


def patterns_csv(patterns: Sequence[ScreenPattern]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "density", "label"])
    for p in patterns:
        for x, d in zip(p.grid.x, p.density):
            w.writerow([_g(x), _g(d), p.label])
    return buf.getvalue()


def read_patterns_csv(text: str) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """label -> (x, density), in file order."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["x", "density", "label"]:
        raise ConfigError("pattern CSV must start with the header x,density,label")
    out: dict[str, tuple[list, list]] = {}
    for r in rows[1:]:
        xs, ds = out.setdefault(r[2], ([], []))
        xs.append(float(r[0]))
        ds.append(float(r[1]))
    return {k: (np.array(v[0]), np.array(v[1])) for k, v in out.items()}


def patterns_json(patterns: Sequence[ScreenPattern]) -> dict:
    g = patterns[0].grid
    return {
        "grid": {"x_min": g.x_min, "x_max": g.x_max, "n": g.n},
        "patterns": [{"label": p.label, "density": [float(v) for v in p.density]} for p in patterns],
    }


def table_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_g(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def patterns_svg(patterns: Sequence[ScreenPattern], title: str = "", width: int = 720, height: int = 360) -> str:
    """Polylines with x ticks; presentation only."""
    grid: ScreenGrid = patterns[0].grid
    x = grid.x
    ymax = max(float(p.density.max()) for p in patterns) or 1.0
    ml, mr, mt, mb = 50, 150, 30, 40
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - grid.x_min) / (grid.x_max - grid.x_min) * pw

    def sy(v):
        return mt + ph - v / ymax * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{ml}" y="18" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in np.linspace(grid.x_min, grid.x_max, 7):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{mt + ph}" x2="{px:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{px:.2f}" y="{mt + ph + 18}" font-family="sans-serif" font-size="11" '
            f'text-anchor="middle">{t:g}</text>'
        )
    for t in np.linspace(0, ymax, 5):
        py = sy(t)
        out.append(f'<line x1="{ml - 5}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{ml - 8}" y="{py + 4:.2f}" font-family="sans-serif" font-size="10" '
            f'text-anchor="end">{t:.3g}</text>'
        )
    for i, p in enumerate(patterns):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6,4"' if p.label == "total" else ""
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, p.density))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{pts}"/>')
        ly = mt + 14 * i + 10
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}"{dash}/>')
        out.append(
            f'<text x="{ml + pw + 35}" y="{ly + 4}" font-family="sans-serif" font-size="11">{p.label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
