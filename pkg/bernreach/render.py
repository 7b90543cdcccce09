# bernreach/render.py
"""Self-contained SVG plots of flowpipe boxes, trajectories and the goal set."""
from __future__ import annotations

import math
from typing import Sequence

from bernreach import ReachError
from bernreach.interval import Box

FLOWPIPE_STYLE = 'fill="none" stroke="#2e8b57" stroke-width="0.6"'
GOAL_STYLE = 'fill="none" stroke="#1f4fd6" stroke-width="1.5" stroke-dasharray="6,3"'
TRAJ_STYLE = 'fill="none" stroke="#d62728" stroke-width="0.5"'
AXIS_STYLE = 'stroke="#000000" stroke-width="1"'


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class ViewTransform:
    """Affine map from data coordinates to SVG pixels (y grows downward)."""

    def __init__(self, xlim: tuple[float, float], ylim: tuple[float, float], width: int, height: int, margin: int):
        self.xlim, self.ylim = xlim, ylim
        self.width, self.height, self.margin = width, height, margin
        self.sx = (width - 2 * margin) / (xlim[1] - xlim[0])
        self.sy = (height - 2 * margin) / (ylim[1] - ylim[0])

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return self.margin + (x - self.xlim[0]) * self.sx, self.height - self.margin - (y - self.ylim[0]) * self.sy


def _limits(values: list[tuple[float, float]]) -> tuple[float, float]:
    finite = [v for pair in values for v in pair if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def view_transform(
    boxes: Sequence[Box],
    trajectories: Sequence,
    dims: tuple[int, int] = (0, 1),
    width: int = 640,
    height: int = 480,
    margin: int = 40,
) -> ViewTransform:
    i, j = dims
    xs, ys = [], []
    for b in boxes:
        xs.append((b[i].lo, b[i].hi))
        ys.append((b[j].lo, b[j].hi))
    for traj in trajectories:
        xs.append((float(traj.states[:, i].min()), float(traj.states[:, i].max())))
        ys.append((float(traj.states[:, j].min()), float(traj.states[:, j].max())))
    return ViewTransform(_limits(xs), _limits(ys), width, height, margin)


def _rect(view: ViewTransform, b: Box, dims: tuple[int, int], style: str) -> str | None:
    i, j = dims
    if not all(math.isfinite(v) for v in (b[i].lo, b[i].hi, b[j].lo, b[j].hi)):
        return None
    x0, y0 = view(b[i].lo, b[j].hi)
    x1, y1 = view(b[i].hi, b[j].lo)
    return f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" {style}/>'


def emit_svg(
    flowpipes: Sequence,
    trajectories: Sequence,
    goal: Box | None,
    dims: tuple[int, int] = (0, 1),
    width: int = 640,
    height: int = 480,
    margin: int = 40,
    labels: tuple[str, str] | None = None,
) -> str:
    """2-D projection; flowpipes need a .box attribute, trajectories a .states array."""
    boxes = [p.box for p in flowpipes]
    n = len(boxes[0]) if boxes else (len(goal) if goal is not None else None)
    if dims[0] == dims[1] or min(dims) < 0 or (n is not None and max(dims) >= n):
        raise ReachError(f"invalid projection axes {dims}")
    extent = boxes + ([goal] if goal is not None and all(math.isfinite(v) for v in goal.lo.tolist() + goal.hi.tolist()) else [])
    view = view_transform(extent, trajectories, dims, width, height, margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" {AXIS_STYLE}/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" {AXIS_STYLE}/>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="11">{_fmt(view.xlim[0])}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" font-size="11" text-anchor="end">{_fmt(view.xlim[1])}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" font-size="11" text-anchor="end">{_fmt(view.ylim[0])}</text>',
        f'<text x="{margin - 4}" y="{margin + 10}" font-size="11" text-anchor="end">{_fmt(view.ylim[1])}</text>',
    ]
    if labels:
        out.append(f'<text x="{width / 2:.1f}" y="{height - 8}" font-size="12" text-anchor="middle">{labels[0]}</text>')
        out.append(f'<text x="12" y="{height / 2:.1f}" font-size="12" text-anchor="middle">{labels[1]}</text>')
    out.append('<g id="flowpipes">')
    out.extend(r for r in (_rect(view, b, dims, FLOWPIPE_STYLE) for b in boxes) if r)
    out.append("</g>")
    if goal is not None:
        rect = _rect(view, goal, dims, GOAL_STYLE)
        if rect:
            out.append(f'<g id="goal">{rect}</g>')
    out.append('<g id="trajectories">')
    for traj in trajectories:
        pts = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in (view(s[dims[0]], s[dims[1]]) for s in traj.states))
        out.append(f'<polyline points="{pts}" {TRAJ_STYLE}/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
