# python
"""
epblowup/handlers/scan_plane.py
Handler for `scan-plane`: outcome map over two of (F0, G0, u0, v0), the
bisected boundary, its line fit and, at the stable node, the exact line.
"""
import logging
from typing import Any, Dict, Optional

from ..linearization import equilibrium_criterion, node_target
from ..model import Params
from ..runlog import write_csv, write_json
from ..scan import ROW_HEADER, ScanResult, scan_plane

logger = logging.getLogger(__name__)

NODE_TOL = 1e-12


def equilibrium_line(p: Params, fixed: Dict[str, float], axes) -> Optional[Dict[str, Any]]:
    """v0 = slope * u0 + intercept where the limit of q vanishes, for data at the stable node."""
    if set(axes) != {"u0", "v0"}:
        return None
    node = node_target(p)
    if node is None or p.k >= 0:
        return None
    F_star, G_star, _rho = node
    if abs(fixed.get("F0", 0.0) - F_star) > NODE_TOL or abs(fixed.get("G0", 0.0) - G_star) > NODE_TOL:
        return None
    denom = p.c0 - p.d * (G_star + 2.0 * F_star**2)
    # 1 = (d F* u0 - k v0) / denom
    return {"slope": p.d * F_star / p.k, "intercept": -denom / p.k, "F_star": F_star, "G_star": G_star}


def _equilibrium_deviation(p: Params, result: ScanResult) -> float:
    worst = 0.0
    ui = result.axes.index("u0")
    for pt in result.boundary:
        u0, v0 = float(pt[ui]), float(pt[1 - ui])
        rep = equilibrium_criterion(p, u0, v0)
        worst = max(worst, abs(min(rep.extra["q_limit"], rep.extra["q_min"])))
    return worst


async def run(session, config) -> Dict[str, Any]:
    p = config.params
    scan = config.scan
    axes = scan.axes
    result = await scan_plane(
        p, scan.fixed, axes, scan.values(axes[0]), scan.values(axes[1]), config.policy, config.jobs, scan.refine
    )
    for ip, v in zip(result.points, result.verdicts):
        await session.log("scan.cell", "scan-plane", point=ip.to_record(), outcome=v.outcome, t_star=v.t_star)
    await session.log(
        "scan.boundary",
        "scan-plane",
        points=int(result.boundary.shape[0]),
        fit=result.fit.to_record() if result.fit is not None else None,
    )

    summary = {"params": p.to_record(), "fixed": dict(scan.fixed), **result.summary()}
    line = equilibrium_line(p, scan.fixed, axes)
    if line is not None:
        line["max_criterion_at_boundary"] = _equilibrium_deviation(p, result) if result.boundary.size else None
        summary["equilibrium_line"] = line

    out = config.output.path
    if config.output.format == "json":
        summary["cells"] = [dict(zip(ROW_HEADER, r)) for r in result.rows()]
        summary["boundary"] = result.boundary.tolist()
        files = [write_json(out / "scan_plane.json", summary)]
    else:
        files = [
            write_csv(out / "scan_plane.csv", ROW_HEADER, result.rows()),
            write_csv(out / "boundary.csv", axes, result.boundary.tolist()),
            write_json(out / "scan_plane.json", summary),
        ]
    summary["files"] = [str(f) for f in files]
    return summary
