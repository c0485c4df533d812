"""Report documents and their JSON, CSV and SVG renderings.

Reports contain no timestamps or host information, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import OutputError

FORMATS = ("json", "csv", "svg")


@dataclass
class ReportDocument:
    command: str
    inputs: dict
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    eigenvalues: list = field(default_factory=list)
    density: dict | None = None
    tool_version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def add_check(self, name, passed, value=None, threshold=None, detail=""):
        self.checks.append({"name": name, "passed": bool(passed), "value": value,
                            "threshold": threshold, "detail": detail})

    def as_dict(self) -> dict:
        doc = {"tool": "fermisig", "tool_version": self.tool_version, "command": self.command,
               "inputs": self.inputs, "seeds": self.seeds, "results": self.results,
               "eigenvalues": list(self.eigenvalues)}
        if self.checks:
            doc["checks"] = self.checks
            doc["passed"] = self.passed
        if self.density is not None:
            doc["density"] = self.density
        return doc


# ------------------------------------------------------------------ JSON

def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _format_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        return json.dumps(str(v))  # JSON has no literal for these
    return format(v, ".17g") if v != int(v) or abs(v) >= 1e16 else format(v, ".1f")


def _dump(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}{json.dumps(k)}: ")
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _dump(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    else:
        out.append(json.dumps(str(obj) if not isinstance(obj, str) else obj))


def to_json(doc: ReportDocument | dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, floats with 17 significant digits."""
    data = _plain(doc.as_dict() if isinstance(doc, ReportDocument) else doc)
    out = []
    _dump(data, 2, 0, out)
    return "".join(out) + "\n"


# ------------------------------------------------------------------ CSV

def eigenvalues_csv(eigenvalues) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(eigenvalues, start=1):
        w.writerow([i, format(float(v), ".17g")])
    return buf.getvalue()


# ------------------------------------------------------------------ SVG

_W, _H, _M = 640, 400, 50


def spectrum_svg(eigenvalues, title="spectrum") -> str:
    """Stem plot of eigenvalues against their index."""
    ev = [float(v) for v in eigenvalues]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    x0, x1 = _M, _W - _M
    y0, y1 = _H - _M, _M
    mid = 0.5 * (y0 + y1)
    parts.append(f'<line x1="{x0}" y1="{mid:.2f}" x2="{x1}" y2="{mid:.2f}" stroke="black"/>')
    if ev:
        scale = max(abs(v) for v in ev) or 1.0
        n = len(ev)
        for i, v in enumerate(ev):
            x = x0 + (x1 - x0) * (i + 0.5) / n
            y = mid - (mid - y1) * v / scale
            parts.append(f'<line x1="{x:.2f}" y1="{mid:.2f}" x2="{x:.2f}" y2="{y:.2f}" stroke="steelblue"/>')
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="steelblue"/>')
        parts.append(f'<text x="{x0 - 5}" y="{y1 + 4}" text-anchor="end" font-size="10">{scale:.4g}</text>')
        parts.append(f'<text x="{x0 - 5}" y="{y0 + 4}" text-anchor="end" font-size="10">{-scale:.4g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def density_svg(values, title="recovered density") -> str:
    """Heat map of a square array in window-pair coordinates (I along x, J along y)."""
    vals = np.asarray(values, dtype=float)
    P = vals.shape[0] if vals.ndim == 2 else 0
    size = min(_W, _H) - 2 * _M
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    if P:
        top = float(np.max(vals)) or 1.0
        cell = size / P
        for p in range(P):
            for q in range(P):
                level = int(round(255 * (1 - max(vals[p, q], 0.0) / top)))
                x = _M + p * cell
                y = _M + (P - 1 - q) * cell
                parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cell:.2f}" height="{cell:.2f}" '
                             f'fill="rgb({level},{level},255)"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(doc: ReportDocument, formats, outdir) -> list:
    """Write the requested renderings into ``outdir`` and return the file paths."""
    formats = list(formats)
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"unknown formats {unknown}")
    try:
        os.makedirs(outdir, exist_ok=True)
        written = []
        if "json" in formats:
            path = os.path.join(outdir, "report.json")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(to_json(doc))
            written.append(path)
        if "csv" in formats:
            path = os.path.join(outdir, "spectrum.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(eigenvalues_csv(doc.eigenvalues))
            written.append(path)
        if "svg" in formats:
            path = os.path.join(outdir, "spectrum.svg")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(spectrum_svg(doc.eigenvalues, f"{doc.command} spectrum"))
            written.append(path)
            if doc.density is not None:
                path = os.path.join(outdir, "density.svg")
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(density_svg(doc.density["values"]))
                written.append(path)
    except OSError as exc:
        raise OutputError(str(exc)) from exc
    return written
