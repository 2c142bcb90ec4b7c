"""Deterministic artifact serialization: CSV, JSON and SVG, written atomically."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

SERIES_HEADER = ("t_f", "n_steps", "dt", "observable", "mean", "std_err")
SPECTRUM_HEADER = ("s", "level_index", "energy_rel_ground", "parity")


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x)) if math.isfinite(x) else str(x)
    return str(x)


def provenance_line(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> str:
    lines = [provenance_line(meta), ",".join(header) + "\n"]
    lines += [",".join(fmt(v) for v in row) + "\n" for row in rows]
    return "".join(lines)


def json_text(doc: dict, meta: dict) -> str:
    return json.dumps({"meta": meta, **doc}, indent=2) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


_W, _H, _M = 480, 360, 56
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    *,
    title: str = "",
    xlabel: str = "t_f",
    ylabel: str = "n_def",
    loglog: bool = True,
) -> str:
    """Minimal self-contained line chart; non-positive values are skipped on log axes."""
    pts = []
    for _, xs, ys in series:
        pts += [(x, y) for x, y in zip(xs, ys) if not loglog or (x > 0 and y > 0)]
    tx = (lambda v: math.log10(v)) if loglog else (lambda v: v)
    if pts:
        xs_t = [tx(x) for x, _ in pts]
        ys_t = [tx(y) for _, y in pts]
        x0, x1 = min(xs_t), max(xs_t)
        y0, y1 = min(ys_t), max(ys_t)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return _M + (tx(x) - x0) / (x1 - x0) * (_W - 2 * _M)

    def py(y):
        return _H - _M - (tx(y) - y0) / (y1 - y0) * (_H - 2 * _M)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_M}" y="{_M}" width="{_W - 2 * _M}" height="{_H - 2 * _M}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="{_M / 2:.1f}" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_H / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    for lo, hi, axis in ((x0, x1, "x"), (y0, y1, "y")):
        ticks = range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1) if loglog else [lo, hi]
        for t in ticks:
            v = 10.0**t if loglog else t
            label = f"1e{t}" if loglog else f"{t:.3g}"
            if axis == "x":
                X = px(v)
                out.append(f'<line x1="{X:.2f}" y1="{_H - _M}" x2="{X:.2f}" y2="{_H - _M + 5}" stroke="black"/>')
                out.append(f'<text x="{X:.2f}" y="{_H - _M + 18}" text-anchor="middle" font-size="10">{label}</text>')
            else:
                Y = py(v)
                out.append(f'<line x1="{_M - 5}" y1="{Y:.2f}" x2="{_M}" y2="{Y:.2f}" stroke="black"/>')
                out.append(f'<text x="{_M - 8}" y="{Y + 3:.2f}" text-anchor="end" font-size="10">{label}</text>')
    for k, (name, xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(
            f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if not loglog or (x > 0 and y > 0)
        )
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(
            f'<text x="{_W - _M - 4}" y="{_M + 14 + 14 * k}" text-anchor="end" font-size="10" fill="{color}">{_esc(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
