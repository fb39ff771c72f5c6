"""Readers, writers and the deterministic SVG barcode renderer.

Floats are serialized with 17 significant digits so every writer/reader pair
round-trips binary-exactly.  All files are UTF-8 with LF line endings, and
readers reject malformed input with the offending line named.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filtration import Filtration, _assemble
from .geometry import PointCloud
from .persistence import PersistenceDiagram

__all__ = [
    "read_point_cloud",
    "write_point_cloud",
    "read_filtration",
    "write_filtration",
    "read_diagram",
    "write_diagram",
    "render_barcode_svg",
    "BarcodeStyle",
]


def fmt(x: float) -> str:
    """17-significant-digit float formatting; 'inf' for infinity."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Point-cloud CSV: one row per point, columns x1,...,xd,weight
# ---------------------------------------------------------------------------


def write_point_cloud(cloud: PointCloud, path, header: bool = False):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            cols = [f"x{i + 1}" for i in range(cloud.dim)] + ["weight"]
            fh.write(",".join(cols) + "\n")
        for p, w in zip(cloud.points, cloud.weights):
            fh.write(",".join(fmt(v) for v in p) + f",{fmt(w)}\n")


def read_point_cloud(path, header: bool | None = None) -> PointCloud:
    """Read a ``x1,...,xd,weight`` CSV; header auto-detected unless forced."""
    rows = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if line_no == 1:
                skip = header if header is not None else not _is_float(parts[0])
                if skip:
                    continue
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ValueError(f"{path}, row {line_no}: non-numeric field") from None
            if len(values) < 2:
                raise ValueError(
                    f"{path}, row {line_no}: need at least one coordinate and a weight"
                )
            if dim is None:
                dim = len(values) - 1
            elif len(values) - 1 != dim:
                raise ValueError(
                    f"{path}, row {line_no}: expected {dim} coordinates, "
                    f"got {len(values) - 1}"
                )
            if values[-1] <= 0 or not math.isfinite(values[-1]):
                raise ValueError(f"{path}, row {line_no}: non-positive weight")
            rows.append(values)
    if not rows:
        return PointCloud(np.zeros((0, 0)), np.zeros(0))
    arr = np.asarray(rows, dtype=float)
    return PointCloud(arr[:, :-1], arr[:, -1])


def _is_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Filtration TSV: dim <TAB> scale <TAB> v0,v1,... in filtration order
# ---------------------------------------------------------------------------


def write_filtration(filt: Filtration, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for simplex, scale in filt:
            fh.write(f"{len(simplex) - 1}\t{fmt(scale)}\t")
            fh.write(",".join(str(v) for v in simplex) + "\n")


def read_filtration(path) -> Filtration:
    rows_by_dim: dict[int, list] = {}
    scales_by_dim: dict[int, list] = {}
    n_points = 0
    t_seen = 0.0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}, line {line_no}: expected 3 tab fields")
            try:
                dim = int(parts[0])
                scale = float(parts[1])
                verts = [int(v) for v in parts[2].split(",")]
            except ValueError:
                raise ValueError(f"{path}, line {line_no}: malformed simplex row") from None
            if dim != len(verts) - 1:
                raise ValueError(
                    f"{path}, line {line_no}: dimension {dim} does not match "
                    f"{len(verts)} vertices"
                )
            rows_by_dim.setdefault(dim, []).append(verts)
            scales_by_dim.setdefault(dim, []).append(scale)
            n_points = max(n_points, max(verts) + 1)
            t_seen = max(t_seen, scale)
    if not rows_by_dim:
        return _assemble(0, [np.zeros((0, 1), np.int32)], [np.zeros(0)], 0, math.inf, "file")
    max_dim = max(rows_by_dim)
    rows = [
        np.asarray(rows_by_dim.get(k, np.zeros((0, k + 1))), np.int32).reshape(-1, k + 1)
        for k in range(max_dim + 1)
    ]
    scales = [np.asarray(scales_by_dim.get(k, []), float) for k in range(max_dim + 1)]
    filt = _assemble(n_points, rows, scales, max_dim, math.inf, "file")
    filt.validate()
    return filt


# ---------------------------------------------------------------------------
# Diagram TSV: dim <TAB> birth <TAB> death, 'inf' for essential classes
# ---------------------------------------------------------------------------


def write_diagram(dgm: PersistenceDiagram, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d, b, dt in zip(dgm.dims, dgm.births, dgm.deaths):
            fh.write(f"{int(d)}\t{fmt(b)}\t{fmt(dt)}\n")


def read_diagram(path) -> PersistenceDiagram:
    points = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}, line {line_no}: expected 3 tab fields")
            try:
                points.append((int(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise ValueError(f"{path}, line {line_no}: malformed diagram row") from None
    return PersistenceDiagram.from_points(points)


# ---------------------------------------------------------------------------
# SVG barcode
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BarcodeStyle:
    width: int = 640
    bar_height: int = 6
    bar_gap: int = 4
    margin: int = 42
    colors: tuple[str, ...] = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def render_barcode_svg(dgm: PersistenceDiagram, style: BarcodeStyle | None = None) -> str:
    """Render stacked per-dimension bars as a deterministic SVG 1.1 document.

    Zero-length bars are dropped; essential bars run to the right margin and
    end in an arrowhead.  Equal diagrams produce byte-identical output.
    """
    style = style or BarcodeStyle()
    bc = dgm.barcode()
    groups = []
    for k in sorted(set(int(d) for d in bc.dims)):
        bars = sorted(bc.in_dim(k), key=lambda bd: (bd[0], bd[1] - bd[0]))
        groups.append((k, bars))
    finite_vals = [v for _, bars in groups for bd in bars for v in bd if math.isfinite(v)]
    x_hi = max(finite_vals) if finite_vals else 1.0
    if x_hi <= 0:
        x_hi = 1.0
    x_hi *= 1.05
    n_bars = sum(len(bars) for _, bars in groups)
    row = style.bar_height + style.bar_gap
    height = 2 * style.margin + max(n_bars, 1) * row + len(groups) * row
    width = style.width
    span = width - 2 * style.margin

    def sx(value: float) -> float:
        return style.margin + span * min(value, x_hi) / x_hi

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    ]
    axis_y = height - style.margin
    parts.append(
        f'<line x1="{style.margin}" y1="{axis_y}" x2="{width - style.margin}" '
        f'y2="{axis_y}" stroke="black" stroke-width="1"/>\n'
    )
    for i in range(7):
        value = x_hi * i / 6
        x = sx(value)
        parts.append(
            f'<line x1="{x:.2f}" y1="{axis_y}" x2="{x:.2f}" y2="{axis_y + 5}" '
            'stroke="black" stroke-width="1"/>\n'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{axis_y + 18}" font-size="10" '
            f'text-anchor="middle" font-family="sans-serif">{value:.3g}</text>\n'
        )
    y = style.margin
    for k, bars in groups:
        color = style.colors[k % len(style.colors)]
        parts.append(
            f'<text x="{style.margin}" y="{y + 4}" font-size="11" '
            f'font-family="sans-serif" fill="{color}">dim {k}</text>\n'
        )
        y += row
        for birth, death in bars:
            x0 = sx(birth)
            if math.isfinite(death):
                x1 = sx(death)
                parts.append(
                    f'<rect x="{x0:.2f}" y="{y}" width="{max(x1 - x0, 0.5):.2f}" '
                    f'height="{style.bar_height}" fill="{color}"/>\n'
                )
            else:
                x1 = width - style.margin
                ym = y + style.bar_height / 2
                parts.append(
                    f'<rect x="{x0:.2f}" y="{y}" width="{max(x1 - x0 - 6, 0.5):.2f}" '
                    f'height="{style.bar_height}" fill="{color}"/>\n'
                )
                parts.append(
                    f'<path d="M {x1 - 6:.2f} {ym - 5:.2f} L {x1:.2f} {ym:.2f} '
                    f'L {x1 - 6:.2f} {ym + 5:.2f} Z" fill="{color}"/>\n'
                )
            y += row
    parts.append("</svg>\n")
    return "".join(parts)
