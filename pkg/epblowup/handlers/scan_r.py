# python
"""
epblowup/handlers/scan_r.py
Handler for `scan-r`: every characteristic of a profile on the r grid; the
solution is smooth only if each of them is.
"""
import logging
from typing import Any, Dict, List, Optional

from ..errors import ConfigError, EpBlowupError, InvalidInputError
from ..mcriteria import zero_velocity_criterion
from ..model import InitialPoint, Params, check_density_positivity, derive_point
from ..runlog import write_csv, write_json
from ..scan import classify_grid

logger = logging.getLogger(__name__)

HEADER = ("r0", "F0", "G0", "u0", "v0", "outcome", "t_star", "criterion")


def _criterion(p: Params, ip: InitialPoint) -> Optional[float]:
    if not p.analytic_regime or p.d < 3 or ip.F0 != 0 or ip.u0 != 0:
        return None
    try:
        return zero_velocity_criterion(p, ip.G0, ip.v0).value
    except EpBlowupError as exc:
        logger.debug("no zero-velocity criterion at r0=%g: %s", ip.r0, exc)
        return None


async def run(session, config) -> Dict[str, Any]:
    if not config.has_profiles:
        raise ConfigError("scan-r needs F0/G0 profiles or a density n0", field="data")
    p = config.params
    F0, G0 = config.profile("F0"), config.profile("G0")
    radii = config.scan.r_values()

    strict = config.data.get("density") == "strict"
    density = check_density_positivity(F0, G0, p, radii, strict)
    if not density.ok:
        raise InvalidInputError(
            f"density positivity violated at r={density.first_violation:g} (margin {density.min_margin:.3g})"
        )

    points = [derive_point(F0, G0, float(r)) for r in radii]
    verdicts = await classify_grid(p, points, config.policy, config.jobs)
    criteria = [_criterion(p, ip) for ip in points]

    rows: List[tuple] = []
    offending = None
    for ip, v, crit in zip(points, verdicts, criteria):
        rows.append((ip.r0, ip.F0, ip.G0, ip.u0, ip.v0, v.outcome, v.t_star, crit))
        if v.blows_up and offending is None:
            offending = ip.r0
        await session.log("point.classified", "scan-r", point=ip.to_record(), outcome=v.outcome, t_star=v.t_star)

    smooth = offending is None
    t_first = min((v.t_star for v in verdicts if v.blows_up and v.t_star is not None), default=None)
    mismatches = [
        ip.r0
        for ip, v, crit in zip(points, verdicts, criteria)
        if crit is not None and abs(crit) > 1e-8 and (crit > 0) != v.smooth
    ]
    if mismatches:
        logger.warning("criterion and detector disagree at r0 = %s", mismatches)

    report: Dict[str, Any] = {
        "params": p.to_record(),
        "global": "smooth" if smooth else "blow-up",
        "offending_r0": offending,
        "earliest_t_star": t_first,
        "points": len(points),
        "density_min_margin": density.min_margin,
        "criterion_mismatches": mismatches,
    }
    out = config.output.path
    if config.output.format == "json":
        report["rows"] = [dict(zip(HEADER, r)) for r in rows]
        report["files"] = [str(write_json(out / "scan_r.json", report))]
    else:
        report["files"] = [str(write_csv(out / "scan_r.csv", HEADER, rows))]
    return report
