# python
"""
epblowup/handlers/classify.py
Handler for `classify`: one characteristic through the detector, plus every
analytic criterion that applies to the data.
"""
import logging
from typing import Any, Dict, List, Optional

from ..characteristics import blows_up_by_separatrix, closed_orbit_criterion, separatrix_threshold
from ..errors import EpBlowupError, InvalidInputError
from ..linearization import (
    BlowupVerdict,
    CriterionReport,
    classify_point,
    criterion_report,
    equilibrium_criterion,
    node_target,
)
from ..mcriteria import zero_velocity_criterion
from ..model import InitialPoint, Params, check_density_positivity, shift_values
from ..runlog import write_csv, write_json

logger = logging.getLogger(__name__)

EQUILIBRIUM_TOL = 1e-12

# "iff": the criterion decides smoothness; "blow-up-only": it only certifies blow-up
CRITERION_KIND = {
    "d1": "iff",
    "separatrix": "blow-up-only",
    "equilibrium": "iff",
}


def _separatrix_check(p: Params, ip: InitialPoint) -> Optional[CriterionReport]:
    if p.d < 2:
        return None
    ps, Gs, _ = shift_values(p, ip.G0, 0.0)
    if not (ps.k < 0 and ps.c0 > 0 and Gs < ps.c0 / ps.d):
        return None
    thr = separatrix_threshold(p, ip.G0)
    rep = criterion_report("separatrix", ip.F0 - thr, F0=ip.F0, G0=ip.G0)
    blow = blows_up_by_separatrix(p, ip.F0, ip.G0)
    # positive value: above the saddle's stable branch, no certificate
    return CriterionReport(rep.name, rep.value, not blow, rep.boundary, 0.0, rep.inputs, {"threshold": thr})


def analytic_checks(p: Params, ip: InitialPoint) -> List[CriterionReport]:
    """Criteria whose hypotheses hold for (p, ip); failures of optional ones are logged and skipped."""
    if not p.analytic_regime:
        return []
    out: List[CriterionReport] = []
    if p.d == 1 and p.k > 0 and ip.u0 == 0 and ip.v0 == 0:
        value = p.k * (p.c0 - 2.0 * ip.G0) - p.m - ip.F0 * ip.F0
        rep = criterion_report("d1", value, F0=ip.F0, G0=ip.G0)
        if rep.smooth != closed_orbit_criterion(p, ip.F0, ip.G0) and not rep.boundary:
            logger.warning("d1 closed form and closed-orbit test disagree at %s", ip)
        out.append(rep)
    sep = _separatrix_check(p, ip)
    if sep is not None:
        out.append(sep)
    node = node_target(p)
    if node is not None and abs(ip.F0 - node[0]) <= EQUILIBRIUM_TOL and abs(ip.G0 - node[1]) <= EQUILIBRIUM_TOL:
        out.append(equilibrium_criterion(p, ip.u0, ip.v0))
    if p.d >= 3 and ip.F0 == 0 and ip.u0 == 0:
        try:
            out.append(zero_velocity_criterion(p, ip.G0, ip.v0))
        except EpBlowupError as exc:
            logger.info("zero-velocity criterion not applicable: %s", exc)
    return out


def agrees(report: CriterionReport, verdict: BlowupVerdict) -> Optional[bool]:
    """None when the criterion sits on its boundary and cannot be compared."""
    if report.boundary:
        return None
    if CRITERION_KIND.get(report.name) == "blow-up-only":
        return verdict.blows_up if not report.smooth else True
    return report.smooth == verdict.smooth


async def run(session, config) -> Dict[str, Any]:
    p = config.params
    ip = config.point()
    if config.has_profiles:
        strict = config.data.get("density") == "strict"
        density = check_density_positivity(
            config.profile("F0"), config.profile("G0"), p, config.scan.r_values(), strict
        )
        if not density.ok:
            raise InvalidInputError(
                f"density positivity violated at r={density.first_violation:g} (margin {density.min_margin:.3g})"
            )

    verdict = classify_point(p, ip, config.policy)
    criteria = analytic_checks(p, ip)
    checks = [{**c.to_record(), "agrees": agrees(c, verdict)} for c in criteria]
    agreement = all(ch["agrees"] is not False for ch in checks)
    if not agreement:
        logger.warning("analytic criteria disagree with the detector at %s", ip)

    await session.log(
        "point.classified",
        "classify",
        point=ip.to_record(),
        outcome=verdict.outcome,
        mechanism=verdict.mechanism,
        t_star=verdict.t_star,
        criteria=[c["criterion"] for c in checks],
        agreement=agreement,
    )
    report = {
        "params": p.to_record(),
        "verdict": verdict.to_record(ip),
        "criteria": checks,
        "agreement": agreement,
    }

    out = config.output.path
    if config.output.format == "json":
        report["files"] = [str(write_json(out / "classify.json", report))]
    else:
        rec = verdict.to_record(ip)
        header = list(rec)
        files = [write_csv(out / "classify.csv", header, [[rec[h] for h in header]])]
        if checks:
            files.append(
                write_csv(
                    out / "criteria.csv",
                    ("criterion", "value", "smooth", "boundary", "error", "agrees"),
                    [
                        (c["criterion"], c["value"], c["smooth"], c["boundary"], c["error"], c["agrees"])
                        for c in checks
                    ],
                )
            )
        report["files"] = [str(f) for f in files]
    return report
