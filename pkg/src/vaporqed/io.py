"""CSV, JSON and SVG emitters.

All writers are deterministic: floats are written with ``repr`` precision,
JSON keys are sorted, and nothing time-dependent is embedded unless asked.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "value") and hasattr(value, "name"):  # Enum
        return value.value
    return value


def dumps_json(payload: Any) -> str:
    return json.dumps(_to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path | str, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(payload), encoding="utf-8")
    return path


def table_to_csv(columns: Mapping[str, Sequence]) -> str:
    """Render named equal-length columns as CSV text.

    Complex columns are split into ``<name>_re`` and ``<name>_im``.
    """
    names: list[str] = []
    data: list[np.ndarray] = []
    length = None
    for name, values in columns.items():
        arr = np.asarray(values)
        if length is None:
            length = arr.shape[0]
        elif arr.shape[0] != length:
            raise ValueError(f"column {name!r} has length {arr.shape[0]}, expected {length}")
        if np.iscomplexobj(arr):
            names += [f"{name}_re", f"{name}_im"]
            data += [arr.real, arr.imag]
        else:
            names.append(name)
            data.append(arr)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*data):
        writer.writerow([_format_cell(v) for v in row])
    return buffer.getvalue()


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: Path | str, columns: Mapping[str, Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_to_csv(columns), encoding="utf-8")
    return path


def write_rows_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


_PALETTE = ("#1f4fbf", "#c0392b", "#27ae60", "#8e44ad", "#e67e22")


def render_svg(
    series: Sequence[tuple[str, np.ndarray, np.ndarray]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    dashed: Sequence[str] = (),
    width: int = 640,
    height: int = 420,
    timestamp: str | None = None,
) -> str:
    """Minimal SVG 1.1 line chart with axes, tick labels and a legend."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 40, 55
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    def sx(x):
        return margin_l + (x - x0) / (x1 - x0) * plot_w

    def sy(y):
        return margin_t + (1.0 - (y - y0) / (y1 - y0)) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]
    for frac in np.linspace(0.0, 1.0, 5):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(
            f'<text x="{sx(xv):.2f}" y="{height - margin_b + 18}" font-size="11" text-anchor="middle">{xv:.3g}</text>'
        )
        out.append(
            f'<text x="{margin_l - 6}" y="{sy(yv) + 4:.2f}" font-size="11" text-anchor="end">{yv:.3g}</text>'
        )
    for idx, (label, x, y) in enumerate(series):
        colour = _PALETTE[idx % len(_PALETTE)]
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(np.asarray(x, float), np.asarray(y, float)))
        dash = ' stroke-dasharray="6,4"' if label in dashed else ""
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.8"{dash} points="{points}"/>')
        ly = margin_t + 16 + 16 * idx
        out.append(f'<line x1="{width - 190}" y1="{ly}" x2="{width - 165}" y2="{ly}" stroke="{colour}"{dash}/>')
        out.append(f'<text x="{width - 160}" y="{ly + 4}" font-size="11">{_escape(label)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="22" font-size="14" text-anchor="middle">{_escape(title)}</text>')
    out.append(
        f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 12}" font-size="12" text-anchor="middle">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{margin_t + plot_h / 2:.1f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {margin_t + plot_h / 2:.1f})">{_escape(ylabel)}</text>'
    )
    if timestamp:
        out.append(f"<!-- generated {timestamp} -->")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path: Path | str, svg: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    return path
