# python
"""
tests/test_scan.py
Grid classification, cell-edge bisection and the boundary line fit.
"""
import asyncio
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from epblowup.model import InitialPoint, Params
from epblowup.scan import classify_grid, fit_line, outcome_edges, point_at, scan_plane

NODE = Params(3, -1.0, 1.0)


def test_point_at_fills_axes_over_fixed_values() -> None:
    ip = point_at({"F0": 0.2, "G0": 0.1, "r0": 2.0}, ("u0", "v0"), -1.0, 3.0)
    assert ip == InitialPoint(2.0, 0.2, 0.1, -1.0, 3.0)
    assert point_at({}, ("G0", "F0"), 0.3, 0.4).F0 == 0.4


def test_outcome_edges() -> None:
    xs = np.array([0.0, 1.0, 2.0])
    ys = np.array([0.0, 1.0])
    blow = np.array([[True, True], [True, False], [False, False]])
    edges = outcome_edges(xs, ys, blow)
    assert len(edges) == 3
    assert ((1.0, 0.0), (1.0, 1.0), True) in edges
    assert outcome_edges(xs, ys, np.zeros((3, 2), dtype=bool)) == []


def test_fit_line_recovers_slope() -> None:
    x = np.linspace(-1.0, 1.0, 11)
    pts = np.column_stack([x, 2.0 * x - 0.5])
    fit = fit_line(pts)
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(-0.5)
    assert fit.relative_residual == pytest.approx(0.0, abs=1e-12)
    assert fit.n_points == 11


def test_fit_line_vertical_and_degenerate() -> None:
    pts = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
    fit = fit_line(pts)
    assert math.isinf(fit.slope)
    assert fit.intercept == pytest.approx(1.0)
    assert fit_line(np.array([[0.0, 0.0]])) is None


def test_fit_line_reports_scatter() -> None:
    pts = np.array([[0.0, 0.0], [1.0, 0.1], [2.0, 0.0], [3.0, 0.1]])
    fit = fit_line(pts, extent=3.0)
    assert 0.0 < fit.relative_residual < 0.05


def test_classify_grid_serial_keeps_order() -> None:
    pts = [InitialPoint(1.0, -0.6, 0.0), InitialPoint(1.0, 0.6, 0.0)]
    verdicts = asyncio.run(classify_grid(NODE, pts))
    assert [v.blows_up for v in verdicts] == [True, False]


@pytest.mark.slow
def test_classify_grid_process_pool_matches_serial() -> None:
    pts = [InitialPoint(1.0, F, 0.0) for F in (-0.6, -0.1, 0.2, 0.6)]
    serial = asyncio.run(classify_grid(NODE, pts))
    pooled = asyncio.run(classify_grid(NODE, pts, jobs=2))
    assert [v.outcome for v in pooled] == [v.outcome for v in serial]


def test_scan_plane_bisects_the_separatrix() -> None:
    # at G0 = 0 the saddle's stable branch passes through F0 = 0
    result = asyncio.run(
        scan_plane(NODE, {"G0": 0.0}, ("F0", "u0"), np.array([-0.6, 0.6]), np.array([0.0]), refine=7)
    )
    assert result.shape == (2, 1)
    assert result.mixed
    assert result.boundary.shape == (1, 2)
    assert abs(result.boundary[0, 0]) < 0.01
    assert result.fit is None
    summary = result.summary()
    assert summary["blow_up_cells"] == 1
    assert len(result.rows()) == 2


def test_scan_plane_without_mixed_cells_skips_boundary() -> None:
    result = asyncio.run(
        scan_plane(NODE, {"G0": 0.0}, ("F0", "u0"), np.array([0.4, 0.6]), np.array([0.0]), refine=7)
    )
    assert not result.mixed
    assert result.boundary.shape == (0, 2)


class CountingPool(ThreadPoolExecutor):
    def __init__(self) -> None:
        super().__init__(max_workers=2)
        self.submitted = 0

    def submit(self, fn, /, *args, **kwargs):
        self.submitted += 1
        return super().submit(fn, *args, **kwargs)


def test_scan_plane_runs_cells_and_bisection_on_one_pool() -> None:
    pool = CountingPool()
    try:
        result = asyncio.run(
            scan_plane(
                NODE, {"G0": 0.0}, ("F0", "u0"), np.array([-0.6, 0.6]), np.array([0.0]), refine=7, executor=pool
            )
        )
        # two grid cells plus one bisected edge
        assert pool.submitted == 3
        assert result.boundary.shape == (1, 2)
        # the caller's pool is left open
        assert pool.submit(abs, -1).result() == 1
    finally:
        pool.shutdown(wait=True)
