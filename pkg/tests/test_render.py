import numpy as np
import pytest

from bernreach import ReachError
from bernreach.flowpipe import FlowpipeBox
from bernreach.interval import Box
from bernreach.render import emit_svg, view_transform
from bernreach.simulate import Trajectory

PIPES = [
    FlowpipeBox(0.0, 0.1, Box.from_pairs([[0, 1], [0, 1]])),
    FlowpipeBox(0.1, 0.2, Box.from_pairs([[0.5, 1.5], [-0.5, 0.5]])),
]
TRAJ = Trajectory(np.array([0.0, 0.1, 0.2]), np.array([[0.5, 0.5], [0.9, 0.2], [1.0, 0.0]]))


def test_empty_plot_is_valid_svg():
    svg = emit_svg([], [], None)
    assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg"')
    assert svg.endswith("</svg>\n")
    assert "<rect" not in svg and "<polyline" not in svg


def test_one_rect_per_flowpipe():
    svg = emit_svg(PIPES[:1], [], None)
    assert svg.count("<rect") == 1
    svg = emit_svg(PIPES, [TRAJ], Box.from_pairs([[0.8, 1.2], [-0.1, 0.1]]), labels=("x1", "x2"))
    assert svg.count("<rect") == 3
    assert svg.count("<polyline") == 1
    assert '<g id="goal">' in svg
    assert ">x1</text>" in svg


def test_output_is_deterministic():
    a = emit_svg(PIPES, [TRAJ], None)
    assert a == emit_svg(PIPES, [TRAJ], None)


def test_invalid_axes():
    with pytest.raises(ReachError):
        emit_svg(PIPES, [], None, dims=(0, 0))
    with pytest.raises(ReachError):
        emit_svg(PIPES, [], None, dims=(0, 2))


def test_view_maps_corners_inside_margins():
    view = view_transform([PIPES[0].box], [], width=200, height=100, margin=10)
    x0, y0 = view(0.0, 0.0)
    x1, y1 = view(1.0, 1.0)
    assert 10 < x0 < x1 < 190
    assert 10 < y1 < y0 < 90


def test_unbounded_goal_is_skipped():
    goal = Box.from_pairs([[-np.inf, np.inf], [0, 1]])
    svg = emit_svg(PIPES, [], goal)
    assert '<g id="goal">' not in svg
    assert svg.count("<rect") == 2
