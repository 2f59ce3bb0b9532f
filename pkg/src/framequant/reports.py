"""Deterministic CSV / JSON / SVG output."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["fmt", "to_jsonable", "dumps_json", "csv_text", "emit_svg", "write_outputs"]


def fmt(v: float) -> str:
    """17 significant digits, the round-trip precision of a double."""
    return f"{float(v):.17g}"


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f) or math.isinf(f):
            return str(f)
        return f
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def emit_svg(sweep, axes: str = "linear", width: int = 640, height: int = 400) -> str:
    """Line+marker chart of ``sweep.rows``.

    In ``loglog`` mode both axes are log10 and the fitted slope is
    annotated when a fit is present.
    """
    rows = [(float(p), float(v)) for p, v in sweep.rows]
    if len(rows) < 2:
        raise ValueError("need at least two rows to draw a chart")
    if axes not in ("linear", "loglog"):
        raise ValueError("axes must be 'linear' or 'loglog'")
    if axes == "loglog":
        rows = [(p, v) for p, v in rows if p > 0 and v > 0]
        if len(rows) < 2:
            raise ValueError("loglog chart needs two positive rows")
        xs = [math.log10(p) for p, _ in rows]
        ys = [math.log10(v) for _, v in rows]
    else:
        xs = [p for p, _ in rows]
        ys = [v for _, v in rows]

    left, right, top, bottom = 70, 20, 30, 50
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - left - right, height - top - bottom

    def px(x: float) -> str:
        return f"{left + (x - x0) / (x1 - x0) * pw:.2f}"

    def py(y: float) -> str:
        return f"{top + ph - (y - y0) / (y1 - y0) * ph:.2f}"

    name = sweep.metadata.get("scenario", "sweep")
    xlabel = sweep.metadata.get("param_name", "param")
    ylabel = sweep.metadata.get("value_name", "value")
    if axes == "loglog":
        xlabel, ylabel = f"log10 {xlabel}", f"log10 {ylabel}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{name}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(
            f'<text x="{px(t)}" y="{top + ph + 16}" text-anchor="middle" font-size="10">{t:.4g}</text>'
        )
    for t in _nice_ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{py(t)}" text-anchor="end" font-size="10">{t:.4g}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>'
    )
    out.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{ylabel}</text>'
    )
    pts = " ".join(f"{px(x)},{py(y)}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{px(x)}" cy="{py(y)}" r="2.5" fill="#1f5fa8"/>')
    fit = getattr(sweep, "fit", None)
    if axes == "loglog" and fit is not None and len(rows) >= 3:
        out.append(
            f'<text x="{left + pw - 4}" y="{top + 14}" text-anchor="end" font-size="12">'
            f"slope = {fit.slope:.4f}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_outputs(sweep, output_dir: Path, formats: Sequence[str], axes: str = "linear") -> list[Path]:
    """Write ``<name>.csv``, ``<name>.json`` and optionally ``<name>.svg``."""
    output_dir.mkdir(parents=True, exist_ok=True)
    name = sweep.metadata["scenario"]
    written = []
    if "csv" in formats:
        path = output_dir / f"{name}.csv"
        path.write_text(sweep.to_csv(), newline="\n")
        written.append(path)
    if "json" in formats:
        path = output_dir / f"{name}.json"
        path.write_text(sweep.to_json(), newline="\n")
        written.append(path)
    if "svg" in formats:
        path = output_dir / f"{name}.svg"
        path.write_text(emit_svg(sweep, axes), newline="\n")
        written.append(path)
    return written
