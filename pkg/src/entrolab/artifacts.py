"""Deterministic CSV output with a provenance comment, and minimal SVG line charts.

Charts are always drawn from a CSV file already on disk, never from live data.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from . import __version__

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def provenance_line(config_hash: str, seed, command: str) -> str:
    return f"# entrolab {__version__} command={command} config_sha256={config_hash} seed={seed}"


def render_csv(header: Sequence[str], rows: Iterable[Sequence], provenance: str | None = None) -> str:
    buf = io.StringIO()
    if provenance:
        buf.write(provenance + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows, provenance: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(header, rows, provenance), encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], list[dict]]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader.fieldnames or []), list(reader)


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while start + k * step <= hi + 1e-12 * step:
        ticks.append(start + k * step)
        k += 1
    return ticks


def svg_line_chart(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], *,
                   title: str = "", xlabel: str = "", ylabel: str = "",
                   dashed: Sequence[str] = (), width: int = 640, height: int = 420) -> str:
    """Line chart with axes and a legend; series named in ``dashed`` are drawn dashed."""
    ml, mr, mt, mb = 64, 150, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    xs = [x for _, sx, _ in series for x in sx if math.isfinite(x)]
    ys = [y for _, _, sy in series for y in sy if math.isfinite(y)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    X = lambda v: ml + (v - x0) / (x1 - x0) * pw
    Y = lambda v: mt + ph - (v - y0) / (y1 - y0) * ph
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{X(t):.2f}" y1="{mt + ph}" x2="{X(t):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X(t):.2f}" y="{mt + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{ml - 4}" y1="{Y(t):.2f}" x2="{ml}" y2="{Y(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{Y(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, sx, sy) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(sx, sy) if math.isfinite(a) and math.isfinite(b))
        dash = ' stroke-dasharray="6 4"' if label in dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = mt + 14 + 16 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(csv_path, svg_path, x: str, ys: Sequence[str], *, group_by: str | None = None,
             where: dict | None = None, dashed: Sequence[str] = (), **labels) -> Path:
    """Read ``csv_path`` and draw columns ``ys`` against ``x``, one line per group value."""
    _, rows = read_csv(csv_path)
    if where:
        rows = [r for r in rows if all(r[k] == str(v) for k, v in where.items())]
    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r[group_by] if group_by else "", []).append(r)
    series = []
    for g, grows in groups.items():
        for col in ys:
            label = f"{col} {group_by}={g}" if group_by else col
            series.append((label, [float(r[x]) for r in grows], [float(r[col]) for r in grows]))
    dashed_labels = [s[0] for s in series if any(s[0].startswith(d) for d in dashed)]
    svg = svg_line_chart(series, dashed=dashed_labels, **labels)
    path = Path(svg_path)
    path.write_text(svg, encoding="utf-8")
    return path
