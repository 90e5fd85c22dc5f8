"""Deterministic artifact emitters: canonical JSON, CSV, and SVG.

All floats are printed with 17 significant digits and dict keys keep their
insertion order, so identical inputs produce byte-identical output.  The
SVG emitters embed every cell value in a <title> element, matching the
numbers written to the sibling JSON artifact.
"""

import json
import math
from xml.sax.saxutils import escape

import numpy as np


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


def _emit(obj, pieces: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} cannot be serialized")
        pieces.append(format_float(value))
    elif isinstance(obj, str):
        pieces.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            pieces.append("{}")
            return
        pieces.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            pieces.append(f'{pad}  {json.dumps(str(key))}: ')
            _emit(value, pieces, indent + 1)
            pieces.append(",\n" if i < len(obj) - 1 else "\n")
        pieces.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            pieces.append("[]")
            return
        pieces.append("[\n")
        for i, value in enumerate(items):
            pieces.append(pad + "  ")
            _emit(value, pieces, indent + 1)
            pieces.append(",\n" if i < len(items) - 1 else "\n")
        pieces.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Serialize to JSON with stable key order and 17-significant-digit floats."""
    pieces: list[str] = []
    _emit(obj, pieces, 0)
    pieces.append("\n")
    return "".join(pieces)


def matrix_csv(values, row_labels, col_labels, corner: str = "") -> str:
    """CSV with a header of column labels and one labeled row per matrix row."""
    values = np.asarray(values, dtype=np.float64)
    lines = [",".join([corner] + [str(c) for c in col_labels])]
    for label, row in zip(row_labels, values):
        lines.append(",".join([str(label)] + [format_float(v) for v in row]))
    return "\n".join(lines) + "\n"


def vector_csv(values, index_label: str = "t", value_label: str = "value") -> str:
    lines = [f"{index_label},{value_label}"]
    for i, v in enumerate(np.asarray(values, dtype=np.float64), start=1):
        lines.append(f"{i},{format_float(v)}")
    return "\n".join(lines) + "\n"


# -- SVG -----------------------------------------------------------------

_SVG_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n'


def _diverging_color(value: float, peak: float) -> str:
    """Blue (negative) to white (zero) to red (positive), bounded by +-peak."""
    if peak <= 0:
        return "rgb(255,255,255)"
    intensity = min(1.0, abs(value) / peak)
    fade = int(round(255 * (1.0 - intensity)))
    if value >= 0:
        return f"rgb(255,{fade},{fade})"
    return f"rgb({fade},{fade},255)"


def svg_heatmap(values, row_labels, col_labels, title: str = "") -> str:
    """Grid heatmap with a symmetric diverging color scale centered at 0."""
    values = np.asarray(values, dtype=np.float64)
    rows, cols = values.shape
    cell = 24
    left, top = 60, 40
    width = left + cols * cell + 20
    height = top + rows * cell + 30
    peak = float(np.max(np.abs(values))) if values.size else 0.0

    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect width="{width}" height="{height}" fill="white"/>\n',
    ]
    if title:
        parts.append(f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>\n')
    for j, label in enumerate(col_labels):
        x = left + j * cell + cell // 2
        parts.append(
            f'<text x="{x}" y="{top - 6}" font-family="sans-serif" font-size="9" '
            f'text-anchor="middle">{escape(str(label))}</text>\n'
        )
    for i, label in enumerate(row_labels):
        y = top + i * cell + cell // 2 + 3
        parts.append(
            f'<text x="{left - 6}" y="{y}" font-family="sans-serif" font-size="9" '
            f'text-anchor="end">{escape(str(label))}</text>\n'
        )
    for i in range(rows):
        for j in range(cols):
            value = float(values[i, j])
            x = left + j * cell
            y = top + i * cell
            color = _diverging_color(value, peak)
            label = f"{row_labels[i]} -> {col_labels[j]}: {format_float(value)}"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{color}" '
                f'stroke="#cccccc" stroke-width="0.5"><title>{escape(label)}</title></rect>\n'
            )
    parts.append("</svg>\n")
    return "".join(parts)


def svg_stemplot(values, title: str = "") -> str:
    """Stem plot of per-step values around a zero baseline."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    cell = 26
    left, top = 50, 40
    plot_height = 160
    width = left + n * cell + 20
    height = top + plot_height + 40
    peak = float(np.max(np.abs(values))) if n else 0.0
    scale = (plot_height / 2 - 10) / peak if peak > 0 else 0.0
    baseline = top + plot_height / 2

    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect width="{width}" height="{height}" fill="white"/>\n',
        f'<line x1="{left}" y1="{baseline:.1f}" x2="{left + n * cell}" y2="{baseline:.1f}" '
        f'stroke="#888888" stroke-width="1"/>\n',
    ]
    if title:
        parts.append(f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>\n')
    for i, value in enumerate(values):
        x = left + i * cell + cell // 2
        y = baseline - float(value) * scale
        label = f"t={i + 1}: {format_float(float(value))}"
        parts.append(
            f'<line x1="{x}" y1="{baseline:.1f}" x2="{x}" y2="{y:.2f}" stroke="#1f4e9c" stroke-width="2"/>\n'
            f'<circle cx="{x}" cy="{y:.2f}" r="3.5" fill="#1f4e9c"><title>{escape(label)}</title></circle>\n'
        )
        parts.append(
            f'<text x="{x}" y="{top + plot_height + 16}" font-family="sans-serif" font-size="9" '
            f'text-anchor="middle">{i + 1}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def svg_channel_graph(values, channel_names, title: str = "") -> str:
    """Directed graph on a circle: edge width and opacity track the matrix.

    Self-edges render as small loops beside their node.  Every edge carries
    a <title> with its exact value.
    """
    values = np.asarray(values, dtype=np.float64)
    d = values.shape[0]
    radius = 40 + 18 * d
    center = radius + 60
    size = 2 * center
    peak = float(values.max()) if values.size else 0.0

    def node_xy(c: int) -> tuple[float, float]:
        angle = 2 * math.pi * c / d - math.pi / 2
        return center + radius * math.cos(angle), center + radius * math.sin(angle)

    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n',
        f'<rect width="{size}" height="{size}" fill="white"/>\n',
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" '
        'markerHeight="7" orient="auto-start-reverse">'
        '<path d="M 0 0 L 10 5 L 0 10 z" fill="#1f4e9c"/></marker></defs>\n',
    ]
    if title:
        parts.append(f'<text x="20" y="24" font-family="sans-serif" font-size="13">{escape(title)}</text>\n')
    for src in range(d):
        for tgt in range(d):
            value = float(values[src, tgt])
            if value <= 0 or peak <= 0:
                continue
            strength = value / peak
            stroke = 0.6 + 4.4 * strength
            opacity = 0.25 + 0.75 * strength
            label = f"{channel_names[src]} -> {channel_names[tgt]}: {format_float(value)}"
            if src == tgt:
                x, y = node_xy(src)
                ox = (x - center) / radius if radius else 0.0
                oy = (y - center) / radius if radius else 0.0
                cx, cy = x + 30 * ox, y + 30 * oy
                parts.append(
                    f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="12" fill="none" stroke="#1f4e9c" '
                    f'stroke-width="{stroke:.2f}" stroke-opacity="{opacity:.3f}">'
                    f'<title>{escape(label)}</title></circle>\n'
                )
            else:
                x1, y1 = node_xy(src)
                x2, y2 = node_xy(tgt)
                # pull endpoints off the node circles
                dx, dy = x2 - x1, y2 - y1
                norm = math.hypot(dx, dy) or 1.0
                x1, y1 = x1 + 20 * dx / norm, y1 + 20 * dy / norm
                x2, y2 = x2 - 22 * dx / norm, y2 - 22 * dy / norm
                parts.append(
                    f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke="#1f4e9c" '
                    f'stroke-width="{stroke:.2f}" stroke-opacity="{opacity:.3f}" marker-end="url(#arrow)">'
                    f'<title>{escape(label)}</title></line>\n'
                )
    for c in range(d):
        x, y = node_xy(c)
        parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="18" fill="#eef2fa" stroke="#333333"/>\n'
            f'<text x="{x:.2f}" y="{y + 4:.2f}" font-family="sans-serif" font-size="10" '
            f'text-anchor="middle">{escape(str(channel_names[c]))}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def svg_forecast_overlay(series_by_name: dict, title: str = "") -> str:
    """Polyline overlay of named sequences (input, forecasts, perturbations)."""
    palette = ("#333333", "#1f4e9c", "#c0392b", "#1e8449", "#7d3c98", "#b7950b")
    sequences = {name: np.asarray(v, dtype=np.float64) for name, v in series_by_name.items()}
    n = max((s.size for s in sequences.values()), default=0)
    cell = 14
    left, top = 50, 46
    plot_height = 200
    width = left + n * cell + 140
    height = top + plot_height + 30
    lo = min((float(s.min()) for s in sequences.values() if s.size), default=0.0)
    hi = max((float(s.max()) for s in sequences.values() if s.size), default=1.0)
    span = (hi - lo) or 1.0

    def ypt(v: float) -> float:
        return top + (hi - v) / span * plot_height

    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect width="{width}" height="{height}" fill="white"/>\n',
    ]
    if title:
        parts.append(f'<text x="{left}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>\n')
    for idx, (name, seq) in enumerate(sequences.items()):
        color = palette[idx % len(palette)]
        points = " ".join(f"{left + i * cell},{ypt(float(v)):.2f}" for i, v in enumerate(seq))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5">'
            f'<title>{escape(str(name))}</title></polyline>\n'
        )
        legend_y = 30 + 14 * idx
        parts.append(
            f'<line x1="{left + n * cell + 10}" y1="{legend_y}" x2="{left + n * cell + 30}" '
            f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>\n'
            f'<text x="{left + n * cell + 36}" y="{legend_y + 4}" font-family="sans-serif" '
            f'font-size="10">{escape(str(name))}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)
