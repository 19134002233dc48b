# python
"""
epblowup/scan.py
Grid sweeps over initial data: concurrent classification, smooth/blow-up
boundary extraction on cell edges and a total-least-squares line fit.
"""
from __future__ import annotations

import asyncio
import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .linearization import DEFAULT_POLICY, BlowupVerdict, HorizonPolicy, classify_point
from .model import InitialPoint, Params

logger = logging.getLogger(__name__)

BISECTION_STEPS = 10


def _classify_task(p: Params, ip: InitialPoint, policy: HorizonPolicy) -> BlowupVerdict:
    return classify_point(p, ip, policy)


async def classify_grid(
    p: Params,
    points: Sequence[InitialPoint],
    policy: HorizonPolicy = DEFAULT_POLICY,
    jobs: int = 1,
    executor: Optional[Executor] = None,
) -> List[BlowupVerdict]:
    """Verdicts in input order; jobs > 1 fans out over a process pool."""
    if jobs <= 1 and executor is None:
        return [classify_point(p, ip, policy) for ip in points]
    loop = asyncio.get_running_loop()
    own = executor is None
    pool = executor or ProcessPoolExecutor(max_workers=jobs)
    try:
        futures = [loop.run_in_executor(pool, _classify_task, p, ip, policy) for ip in points]
        return list(await asyncio.gather(*futures))
    finally:
        if own:
            pool.shutdown(wait=True)


def point_at(fixed: Dict[str, float], axes: Tuple[str, str], x: float, y: float) -> InitialPoint:
    values = {"F0": 0.0, "G0": 0.0, "u0": 0.0, "v0": 0.0, **{k: v for k, v in fixed.items() if k != "r0"}}
    values[axes[0]] = float(x)
    values[axes[1]] = float(y)
    return InitialPoint(fixed.get("r0", 1.0), values["F0"], values["G0"], values["u0"], values["v0"])


def bisect_edge(
    p: Params,
    make_point: Callable[[float, float], InitialPoint],
    a: Tuple[float, float],
    b: Tuple[float, float],
    blow_a: bool,
    policy: HorizonPolicy = DEFAULT_POLICY,
    steps: int = BISECTION_STEPS,
) -> Tuple[float, float]:
    """Midpoint of the bracket left after `steps` halvings of the segment a-b."""
    lo = np.asarray(a, dtype=float)
    hi = np.asarray(b, dtype=float)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        blow = classify_point(p, make_point(float(mid[0]), float(mid[1])), policy).blows_up
        if blow == blow_a:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return float(mid[0]), float(mid[1])


def _edge_task(p, fixed, axes, a, b, blow_a, policy, steps):
    return bisect_edge(p, lambda x, y: point_at(fixed, axes, x, y), a, b, blow_a, policy, steps)


def outcome_edges(xs: np.ndarray, ys: np.ndarray, blow: np.ndarray) -> List[Tuple[Tuple[float, float], Tuple[float, float], bool]]:
    """Adjacent grid nodes with different outcomes, as (a, b, blow_at_a)."""
    edges = []
    nx, ny = blow.shape
    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx and blow[i, j] != blow[i + 1, j]:
                edges.append(((xs[i], ys[j]), (xs[i + 1], ys[j]), bool(blow[i, j])))
            if j + 1 < ny and blow[i, j] != blow[i, j + 1]:
                edges.append(((xs[i], ys[j]), (xs[i], ys[j + 1]), bool(blow[i, j])))
    return edges


async def extract_boundary(
    p: Params,
    fixed: Dict[str, float],
    axes: Tuple[str, str],
    xs: np.ndarray,
    ys: np.ndarray,
    blow: np.ndarray,
    policy: HorizonPolicy = DEFAULT_POLICY,
    steps: int = BISECTION_STEPS,
    jobs: int = 1,
    executor: Optional[Executor] = None,
) -> np.ndarray:
    edges = outcome_edges(xs, ys, blow)
    if not edges:
        return np.empty((0, 2))
    if jobs <= 1 and executor is None:
        pts = [_edge_task(p, fixed, axes, a, b, ba, policy, steps) for a, b, ba in edges]
        return np.array(pts, dtype=float)
    loop = asyncio.get_running_loop()
    own = executor is None
    pool = executor or ProcessPoolExecutor(max_workers=jobs)
    try:
        futures = [loop.run_in_executor(pool, _edge_task, p, fixed, axes, a, b, ba, policy, steps) for a, b, ba in edges]
        pts = list(await asyncio.gather(*futures))
    finally:
        if own:
            pool.shutdown(wait=True)
    return np.array(pts, dtype=float)


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    normal: Tuple[float, float]
    offset: float  # normal . (x, y) = offset
    max_residual: float
    relative_residual: float
    n_points: int

    def to_record(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "normal": list(self.normal),
            "offset": self.offset,
            "max_residual": self.max_residual,
            "relative_residual": self.relative_residual,
            "n_points": self.n_points,
        }


def fit_line(points: np.ndarray, extent: Optional[float] = None) -> Optional[LineFit]:
    """
    Orthogonal (total least squares) line through the points. The relative
    residual is the largest perpendicular distance over `extent` (default: the
    larger side of the points' bounding box).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        return None
    center = pts.mean(axis=0)
    _u, _s, vt = np.linalg.svd(pts - center)
    direction, normal = vt[0], vt[-1]
    residuals = np.abs((pts - center) @ normal)
    span = extent if extent is not None else float(np.max(np.ptp(pts, axis=0)))
    max_res = float(np.max(residuals))
    rel = max_res / span if span > 0 else math.inf
    if abs(direction[0]) > 1e-14:
        slope = float(direction[1] / direction[0])
        intercept = float(center[1] - slope * center[0])
    else:
        slope, intercept = math.inf, float(center[0])
    return LineFit(slope, intercept, (float(normal[0]), float(normal[1])), float(normal @ center), max_res, rel, int(pts.shape[0]))


@dataclass
class ScanResult:
    axes: Tuple[str, str]
    xs: np.ndarray
    ys: np.ndarray
    points: List[InitialPoint] = field(repr=False)
    verdicts: List[BlowupVerdict] = field(repr=False)
    boundary: np.ndarray = field(default_factory=lambda: np.empty((0, 2)), repr=False)
    fit: Optional[LineFit] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.xs), len(self.ys)

    @property
    def blow(self) -> np.ndarray:
        return np.array([v.blows_up for v in self.verdicts], dtype=bool).reshape(self.shape)

    @property
    def mixed(self) -> bool:
        b = self.blow
        return bool(b.any() and not b.all())

    def rows(self) -> List[Tuple[Any, ...]]:
        out = []
        for ip, v in zip(self.points, self.verdicts):
            out.append((ip.F0, ip.G0, ip.u0, ip.v0, v.outcome, v.mechanism or "", v.t_star, v.q_min, v.boundary))
        return out

    def summary(self) -> Dict[str, Any]:
        b = self.blow
        return {
            "axes": list(self.axes),
            "shape": list(self.shape),
            "blow_up_cells": int(b.sum()),
            "smooth_cells": int(b.size - b.sum()),
            "boundary_points": int(self.boundary.shape[0]),
            "fit": self.fit.to_record() if self.fit is not None else None,
        }


ROW_HEADER = ("F0", "G0", "u0", "v0", "outcome", "mechanism", "t_star", "q_min", "boundary")


async def scan_plane(
    p: Params,
    fixed: Dict[str, float],
    axes: Tuple[str, str],
    xs: np.ndarray,
    ys: np.ndarray,
    policy: HorizonPolicy = DEFAULT_POLICY,
    jobs: int = 1,
    refine: int = BISECTION_STEPS,
    executor: Optional[Executor] = None,
) -> ScanResult:
    """
    Row-major over (xs, ys): cell (i, j) is (xs[i], ys[j]). Grid cells and
    boundary bisection share one pool; a caller-supplied executor is left open.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    points = [point_at(fixed, axes, x, y) for x in xs for y in ys]
    own = executor is None and jobs > 1
    pool = ProcessPoolExecutor(max_workers=jobs) if own else executor
    try:
        verdicts = await classify_grid(p, points, policy, jobs, pool)
        result = ScanResult(axes, xs, ys, points, verdicts)
        if result.mixed and refine > 0:
            result.boundary = await extract_boundary(p, fixed, axes, xs, ys, result.blow, policy, refine, jobs, pool)
            extent = max(float(np.ptp(xs)), float(np.ptp(ys)))
            result.fit = fit_line(result.boundary, extent)
    finally:
        if own:
            pool.shutdown(wait=True)
    logger.info("scan %s x %s: %s", axes[0], axes[1], result.summary())
    return result
