# python
"""
epblowup/handlers/phase_portrait.py
Handler for `phase-portrait`: sampled (F, G) trajectories from seed points,
equilibria markers and the saddle separatrix as plot-ready tables.
"""
import logging
from typing import Any, Dict, List

import numpy as np

from ..characteristics import CharacteristicState, integrate_characteristic, separatrix_curve
from ..errors import EpBlowupError
from ..model import classify_equilibria, shift_values
from ..runlog import write_csv, write_json

logger = logging.getLogger(__name__)


async def run(session, config) -> Dict[str, Any]:
    p = config.params
    phase = config.section("phase")
    t_end = float(phase["t_end"])
    n = int(phase["samples"])

    traj_rows: List[tuple] = []
    escaped = 0
    for idx, (F0, G0) in enumerate(phase["seeds"]):
        s0 = CharacteristicState(0.0, 1.0, float(F0), float(G0))
        traj = integrate_characteristic(p, s0, t_end, config.policy.rtol, config.policy.atol, config.policy.escape)
        escaped += int(traj.escaped)
        for t in np.linspace(0.0, traj.t_end, n):
            s = traj.state(float(t))
            traj_rows.append((idx, s.t, s.r, s.F, s.G))

    eq_rows: List[tuple] = []
    sep_rows: List[tuple] = []
    regime = None
    if p.analytic_regime:
        eq = classify_equilibria(p)
        regime = eq.regime
        eq_rows = [(e.kind, e.F, e.G) for e in eq.entries]
        ps, _, _ = shift_values(p, 0.0, 0.0)
        if ps.k < 0 and ps.c0 > 0 and p.d >= 2:
            try:
                sep_rows = [tuple(row) for row in separatrix_curve(p, int(phase["separatrix_points"]))]
            except EpBlowupError as exc:
                logger.warning("separatrix not sampled: %s", exc)

    report: Dict[str, Any] = {
        "params": p.to_record(),
        "seeds": len(phase["seeds"]),
        "escaped": escaped,
        "regime": regime,
        "equilibria": [dict(zip(("kind", "F", "G"), r)) for r in eq_rows],
        "separatrix_points": len(sep_rows),
    }
    out = config.output.path
    if config.output.format == "json":
        report["trajectories"] = [dict(zip(("seed", "t", "r", "F", "G"), r)) for r in traj_rows]
        report["separatrix"] = [dict(zip(("G", "F_upper", "F_lower"), r)) for r in sep_rows]
        files = [write_json(out / "phase_portrait.json", report)]
    else:
        files = [
            write_csv(out / "trajectories.csv", ("seed", "t", "r", "F", "G"), traj_rows),
            write_csv(out / "equilibria.csv", ("kind", "F", "G"), eq_rows),
        ]
        if sep_rows:
            files.append(write_csv(out / "separatrix.csv", ("G", "F_upper", "F_lower"), sep_rows))
    report["files"] = [str(f) for f in files]
    await session.log("phase.sampled", "phase-portrait", seeds=report["seeds"], escaped=escaped, regime=regime)
    return report
