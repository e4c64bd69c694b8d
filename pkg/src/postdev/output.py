"""CSV, JSON and SVG writers for analysis outputs.

Numbers are written with a fixed repr so that identical inputs give
byte-identical files.
"""

from __future__ import annotations

import json
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    return repr(float(x))


def write_columns(path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    path = Path(path)
    cols = [np.asarray(c).ravel() for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_columns(path) -> dict:
    arr = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.atleast_1d(arr[name]) for name in arr.dtype.names}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def update_summary(out_dir, section: str, payload: dict) -> Path:
    """Merge ``payload`` under ``section`` into ``summary.json``."""
    path = Path(out_dir) / "summary.json"
    doc = {}
    if path.exists():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError:
            doc = {}
    doc["schema_version"] = SCHEMA_VERSION
    doc[section] = _jsonable(payload)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_DASHES = ("", "6,3", "2,3", "8,3,2,3", "4,4", "1,2")


def render_svg(path, series: Sequence[tuple[str, np.ndarray, np.ndarray]], title: str = "",
               xlabel: str = "", ylabel: str = "", width: int = 640, height: int = 420) -> Path:
    """Line plot of ``(label, x, y)`` series as a standalone SVG file."""
    pad_l, pad_r, pad_t, pad_b = 64, 20, 36, 48
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(v):
        return pad_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{sx(v):.1f}" y="{pad_t + ph + 16}" text-anchor="middle">{v:.4g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{pad_l - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, x, y) in enumerate(series):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(np.asarray(x), np.asarray(y)))
        dash = _DASHES[k % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        color = _PALETTE[k % len(_PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = pad_t + 14 + 16 * k
        out.append(f'<line x1="{pad_l + pw - 110}" y1="{ly - 4}" x2="{pad_l + pw - 85}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{pad_l + pw - 80}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def svg_from_csv(csv_paths: Sequence, svg_path, labels: Sequence[str] | None = None, **kwargs) -> Path:
    """Render two-column CSV curves (first column x, second y) into one SVG."""
    series = []
    for k, p in enumerate(csv_paths):
        cols = read_columns(p)
        names = list(cols)
        label = labels[k] if labels else Path(p).stem
        series.append((label, cols[names[0]], cols[names[1]]))
    return render_svg(svg_path, series, **kwargs)
