# python
"""
epblowup/suites.py
Cross-validation suites: analytic criteria and structural properties checked
against the numerical detector. Each suite returns a SuiteResult; the crossval
handler turns failures into a SuiteFailure.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Awaitable, Callable, Dict, List, Tuple

import numpy as np

from .characteristics import (
    CharacteristicState,
    conserved_mass,
    first_integral,
    integrate_characteristic,
    is_isochronous,
    linear_period,
    period_of_orbit,
    separatrix_threshold,
)
from .errors import ConfigError, EpBlowupError
from .linearization import (
    DEFAULT_POLICY,
    HorizonPolicy,
    classify_point,
    direct_uv,
    equilibrium_criterion,
    integrate_coupled,
    node_target,
    third_order_residual,
)
from .mcriteria import (
    criterion_c0_zero_velocity,
    criterion_d4_attractive,
    criterion_d4_c0_zero_velocity,
    frobenius_fundamental,
    heun_fundamental,
    hypergeom_fundamental,
    m_chart,
    y_equation_residual,
)
from .model import FamilyProfile, InitialPoint, Params
from .scan import scan_plane

logger = logging.getLogger(__name__)

RADON_TOL = 1e-6
RADON_Q_FLOOR = 0.1
CONSERVATION_TOL = 1e-8
ISOCHRONY_TOL = 1e-6
ISOCHRONY_CONTROL_SPREAD = 1e-3
Y1_RESIDUAL_TOL = 1e-9
ROUTE_TOL = 1e-7
THIRD_ORDER_TOL = 1e-6
LINE_FIT_TOL = 0.02
EQUILIBRIUM_LINE_TOL = 0.02
D1_BAND = 1e-6
SEPARATRIX_OFFSET = 1e-3


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    metrics: Dict[str, Any] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    def fail(self, **detail: Any) -> None:
        self.passed = False
        self.failures.append(detail)

    def to_record(self) -> Dict[str, Any]:
        return {
            "suite": self.name,
            "passed": self.passed,
            "metrics": dict(self.metrics),
            "failures": list(self.failures[:50]),
            "n_failures": len(self.failures),
        }


@dataclass(frozen=True)
class SuiteOptions:
    size: int = 10
    band: float = 0.01
    seed: int = 12345
    policy: HorizonPolicy = DEFAULT_POLICY
    jobs: int = 1

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _sign_agreement(result: SuiteResult, rows: List[Tuple[Dict[str, Any], float, bool]], band: float) -> None:
    """rows: (inputs, criterion value, detector says smooth); values inside the band are skipped."""
    checked = skipped = agree = 0
    for inputs, value, detector_smooth in rows:
        if abs(value) < band:
            skipped += 1
            continue
        checked += 1
        if (value > 0) == detector_smooth:
            agree += 1
        else:
            result.fail(**inputs, value=value, detector_smooth=detector_smooth)
    result.metrics.update(
        {"checked": checked, "skipped_band": skipped, "agreement": agree / checked if checked else 1.0}
    )


# ---------------------------------------------------------------- criterion grids


async def suite_d4_c0(opts: SuiteOptions) -> SuiteResult:
    """
    d = 4, k = 1, c = 0 closed form against the detector on
    (M0, v0) in [0.5, 2] x [-3, 1]. The grid is in the nonlocal-pressure
    orientation, value 1 + 2 v0 / M0^2; the detector gets the system
    variable -v0.
    """
    result = SuiteResult("d4-c0")
    result.metrics["orientation"] = "v0 = nonlocal-pressure data, system v0 = -v0"
    p = Params(4, 1.0, 0.0)
    n = 2 * opts.size
    rows = []
    for M0 in np.linspace(0.5, 2.0, n):
        for v0 in np.linspace(-3.0, 1.0, n):
            v0_system = -v0
            value = criterion_d4_c0_zero_velocity(M0, v0_system).value
            inputs = {"M0": M0, "v0": v0, "v0_system": v0_system}
            if abs(value) < opts.band:
                rows.append((inputs, value, True))
                continue
            verdict = classify_point(p, InitialPoint(1.0, 0.0, -(M0**2) / 4.0, 0.0, v0_system), opts.policy)
            rows.append((inputs, value, verdict.smooth))
    _sign_agreement(result, rows, opts.band)
    return result


async def suite_hypergeom(opts: SuiteOptions) -> SuiteResult:
    """Hypergeometric criterion for d in {3, 5} plus the Y1 residual for several d."""
    result = SuiteResult("hypergeom")
    rows = []
    for d in (3, 5):
        p = Params(d, 1.0, 0.0)
        for M0 in np.linspace(0.5, 2.0, opts.size):
            G0 = -(M0 ** (d / 2.0)) / d
            # the criterion is affine in v0: value = 1 + slope * v0
            slope = criterion_c0_zero_velocity(p, G0, 1.0).value - 1.0
            for v0 in np.linspace(-1.0, 3.0, opts.size):
                value = 1.0 + slope * v0
                inputs = {"d": d, "M0": M0, "v0": v0}
                if abs(value) < opts.band:
                    rows.append((inputs, value, True))
                    continue
                verdict = classify_point(p, InitialPoint(1.0, 0.0, G0, 0.0, v0), opts.policy)
                rows.append((inputs, value, verdict.smooth))
    _sign_agreement(result, rows, opts.band)

    worst = 0.0
    for d in (3, 4, 5, 6):
        M0 = 1.3
        chart = m_chart(Params(d, 1.0, 0.0), 0.0, -(M0 ** (d / 2.0)) / d)
        pair = hypergeom_fundamental(d, M0)
        for M in np.linspace(0.05, 0.95, 50) * M0:
            res = y_equation_residual(chart, M, pair.Y1(M), pair.Y1_prime(M), pair.Y1_second(M))
            worst = max(worst, abs(res))
    result.metrics["y1_residual"] = worst
    if worst >= Y1_RESIDUAL_TOL:
        result.fail(check="y1_residual", value=worst)
    return result


async def suite_heun(opts: SuiteOptions) -> SuiteResult:
    """d = 4 attractive criterion (Heun route) against the detector, and route agreement."""
    result = SuiteResult("heun")
    p = Params(4, -1.0, 1.0)
    rows = []
    for M0 in np.linspace(0.15, 0.85, opts.size):
        slope = criterion_d4_attractive(M0, 1.0).value - 1.0
        G0 = (1.0 - M0**2) / 4.0
        for v0 in np.linspace(-3.0, 1.0, opts.size):
            value = 1.0 + slope * v0
            inputs = {"M0": M0, "v0": v0}
            if abs(value) < opts.band:
                rows.append((inputs, value, True))
                continue
            verdict = classify_point(p, InitialPoint(1.0, 0.0, G0, 0.0, v0), opts.policy)
            rows.append((inputs, value, verdict.smooth))
    _sign_agreement(result, rows, opts.band)

    worst = 0.0
    for M0 in (0.3, 0.5, 0.8):
        heun = heun_fundamental(M0)
        frob = frobenius_fundamental(m_chart(p, 0.0, (1.0 - M0**2) / 4.0))
        grid = np.linspace(0.05, 0.95, 19) * M0
        for name in ("Y1", "Ybar2"):
            a = np.array([getattr(heun, name)(M) for M in grid])
            b = np.array([getattr(frob, name)(M) for M in grid])
            err = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
            worst = max(worst, err)
            if err >= ROUTE_TOL:
                result.fail(check="route", M0=M0, solution=name, relative_error=err)
    result.metrics["route_agreement"] = worst
    return result


# ---------------------------------------------------------------- phase plane


async def suite_separatrix(opts: SuiteOptions) -> SuiteResult:
    """Below the separatrix every orbit escapes; above it every orbit reaches the node."""
    result = SuiteResult("separatrix")
    p = Params(3, -1.0, 1.0)
    F_star, G_star, _rho = node_target(p)  # type: ignore[misc]
    rng = opts.rng()
    n = 5 * opts.size
    escaped = converged = 0
    for _ in range(n):
        G0 = float(rng.uniform(-1.0, 0.3))
        thr = separatrix_threshold(p, G0)
        F0 = thr - SEPARATRIX_OFFSET - float(rng.uniform(0.0, 0.5))
        traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, F0, G0), 200.0, opts.policy.rtol)
        if traj.escaped:
            escaped += 1
        else:
            result.fail(side="below", F0=F0, G0=G0)
    for _ in range(n):
        G0 = float(rng.uniform(-1.0, 0.3))
        thr = separatrix_threshold(p, G0)
        F0 = thr + SEPARATRIX_OFFSET + float(rng.uniform(0.0, 1.0))
        traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, F0, G0), 200.0, opts.policy.rtol)
        end = traj.final
        if not traj.escaped and abs(end.F - F_star) < 1e-3 and abs(end.G - G_star) < 1e-3:
            converged += 1
        else:
            result.fail(side="above", F0=F0, G0=G0, F_end=end.F, G_end=end.G)
    result.metrics.update({"below": n, "escaped": escaped, "above": n, "converged": converged})
    return result


async def suite_conservation(opts: SuiteOptions) -> SuiteResult:
    """First integral and (c - dG) r^d along ten linear periods."""
    result = SuiteResult("conservation")
    for d in (2, 3, 4):
        p = Params(d, 1.0, 1.0)
        F0, G0 = 0.3, 0.1
        traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, F0, G0), 10.0 * linear_period(p), 1e-10)
        C0 = first_integral(p, F0, G0).value
        mass0 = conserved_mass(p, 1.0, G0)
        drift_C = drift_mass = 0.0
        for t in np.linspace(0.0, traj.t_end, 400):
            s = traj.state(t)
            drift_C = max(drift_C, abs(first_integral(p, s.F, s.G).value - C0) / abs(C0))
            drift_mass = max(drift_mass, abs(conserved_mass(p, s.r, s.G) - mass0) / abs(mass0))
        result.metrics[f"d{d}"] = {"first_integral": drift_C, "mass": drift_mass}
        if drift_C >= CONSERVATION_TOL or drift_mass >= CONSERVATION_TOL:
            result.fail(d=d, first_integral=drift_C, mass=drift_mass)
    return result


async def suite_isochrony(opts: SuiteOptions) -> SuiteResult:
    """d = 4 periods are amplitude independent; the d = 3 control is not."""
    result = SuiteResult("isochrony")
    amplitudes = np.linspace(0.05, 0.6, 2 * opts.size)
    for d in (4, 3):
        p = Params(d, 1.0, 1.0)
        T_lin = linear_period(p)
        periods = np.array([period_of_orbit(p, float(a), 0.0, 1e-12) for a in amplitudes])
        spread = float((periods.max() - periods.min()) / T_lin)
        to_linear = float(np.max(np.abs(periods - T_lin)) / T_lin)
        result.metrics[f"d{d}"] = {"spread": spread, "vs_linear": to_linear, "isochronous": is_isochronous(p)}
        if d == 4 and (spread >= ISOCHRONY_TOL or to_linear >= ISOCHRONY_TOL):
            result.fail(d=d, spread=spread, vs_linear=to_linear)
        if d == 3 and spread <= ISOCHRONY_CONTROL_SPREAD:
            result.fail(d=d, spread=spread, expected="spread above control threshold")
    return result


async def suite_d1(opts: SuiteOptions) -> SuiteResult:
    """Random one-dimensional data against F0^2 < c - 2 G0."""
    result = SuiteResult("d1")
    rng = opts.rng()
    policy = HorizonPolicy(
        periods=5.0, rtol=opts.policy.rtol, atol=opts.policy.atol, escape=opts.policy.escape
    )
    rows = []
    for _ in range(opts.size * opts.size):
        c = float(rng.uniform(0.2, 2.0))
        F0 = float(rng.uniform(-1.5, 1.5))
        G0 = float(rng.uniform(-1.0, 0.9 * c))
        value = c - 2.0 * G0 - F0 * F0
        inputs = {"c": c, "F0": F0, "G0": G0}
        if abs(value) < D1_BAND:
            rows.append((inputs, value, True))
            continue
        verdict = classify_point(Params(1, 1.0, c), InitialPoint(1.0, F0, G0, 0.0, 0.0), policy)
        rows.append((inputs, value, verdict.smooth))
    _sign_agreement(result, rows, D1_BAND)
    return result


# ---------------------------------------------------------------- linearization


def _random_point(rng: np.random.Generator, G_hi: float) -> InitialPoint:
    return InitialPoint(
        1.0,
        float(rng.uniform(-0.5, 0.5)),
        float(rng.uniform(-0.5, G_hi)),
        float(rng.uniform(-1.0, 1.0)),
        float(rng.uniform(-1.0, 1.0)),
    )


RADON_REGIMES: Dict[str, Tuple[Params, float]] = {
    "center": (Params(3, 1.0, 1.0), 0.3),
    "c0": (Params(3, 1.0, 0.0), -0.05),
    "node": (Params(3, -1.0, 1.0), 0.3),
}


async def suite_radon(opts: SuiteOptions) -> SuiteResult:
    """(p1/q, p2/q) from the linear system against the directly integrated (u, v)."""
    result = SuiteResult("radon")
    rng = opts.rng()
    for regime, (p, G_hi) in RADON_REGIMES.items():
        worst = 0.0
        for _ in range(opts.size * opts.size):
            ip = _random_point(rng, G_hi)
            traj = integrate_coupled(p, ip, 5.0, opts.policy.rtol, opts.policy.atol)
            uv = direct_uv(p, ip, traj.t_end, opts.policy.rtol, opts.policy.atol)
            t_max = min(traj.t_end, float(uv.t[-1]))
            for t in np.linspace(0.0, t_max, 100):
                _r, _F, _G, q, p1, p2 = traj.sol(t)
                if q < RADON_Q_FLOOR:
                    break
                u, v = uv.uv(t)
                worst = max(worst, abs(p1 / q - u), abs(p2 / q - v))
        result.metrics[regime] = worst
        if worst >= RADON_TOL:
            result.fail(regime=regime, max_deviation=worst)
    return result


THIRD_ORDER_CASES: Dict[str, Tuple[Params, float]] = {
    "center": (Params(3, 1.0, 1.0), 0.3),
    "node": (Params(3, -1.0, 1.0), 0.3),
    "damped": (Params(3, 1.0, 1.0, 0.0, 0.3), 0.3),
    "variable-c": (Params(3, 1.0, FamilyProfile.make("gaussian", a=1.0, sigma=2.0)), -0.1),
}


async def suite_third_order(opts: SuiteOptions) -> SuiteResult:
    """The third-order equation for q holds along random trajectories."""
    result = SuiteResult("third-order")
    rng = opts.rng()
    per_case = max(1, (2 * opts.size) // len(THIRD_ORDER_CASES))
    worst = 0.0
    checked = 0
    for case, (p, G_hi) in THIRD_ORDER_CASES.items():
        for _ in range(per_case):
            ip = _random_point(rng, G_hi)
            traj = integrate_coupled(p, ip, 3.0, 1e-12, 1e-14)
            if traj.t_end < 0.1:
                continue
            res = third_order_residual(traj, p, n_samples=100).max_abs
            checked += 1
            worst = max(worst, res)
            if res >= THIRD_ORDER_TOL:
                result.fail(case=case, point=ip.to_record(), residual=res)
    result.metrics.update({"trajectories": checked, "max_residual": worst})
    return result


# ---------------------------------------------------------------- plane structure


BOUNDARY_PLANES: Tuple[Tuple[Tuple[str, str], Dict[str, float], Tuple[float, float], Tuple[float, float]], ...] = (
    (("G0", "v0"), {"F0": 0.0, "u0": 0.0}, (-1.0, 0.3), (-3.0, 3.0)),
    (("F0", "u0"), {"G0": 0.0, "v0": 0.0}, (-1.5, 1.5), (-3.0, 3.0)),
    (("u0", "v0"), {"F0": 0.0, "G0": 0.2}, (-3.0, 3.0), (-3.0, 3.0)),
)


async def suite_planes(opts: SuiteOptions) -> SuiteResult:
    """Near-linear boundaries on three planes plus the exact line at the node."""
    result = SuiteResult("planes")
    p = Params(3, -1.0, 1.0)
    n = max(opts.size, 4)
    for axes, fixed, xr, yr in BOUNDARY_PLANES:
        scan = await scan_plane(
            p, {**fixed, "r0": 1.0}, axes, np.linspace(*xr, n), np.linspace(*yr, n), opts.policy, opts.jobs
        )
        key = "-".join(axes)
        fit = scan.fit
        result.metrics[key] = scan.summary()
        if fit is None:
            result.fail(plane=key, reason="no boundary found")
        elif fit.relative_residual >= LINE_FIT_TOL:
            result.fail(plane=key, relative_residual=fit.relative_residual)

    F_star, G_star, _rho = node_target(p)  # type: ignore[misc]
    scan = await scan_plane(
        p,
        {"F0": F_star, "G0": G_star, "r0": 1.0},
        ("u0", "v0"),
        np.linspace(-3.0, 3.0, n),
        np.linspace(-3.0, 3.0, n),
        opts.policy,
        opts.jobs,
    )
    worst = 0.0
    for u0, v0 in scan.boundary:
        rep = equilibrium_criterion(p, float(u0), float(v0))
        worst = max(worst, abs(min(rep.extra["q_limit"], rep.extra["q_min"])))
    result.metrics["equilibrium"] = {**scan.summary(), "max_criterion_at_boundary": worst}
    if scan.boundary.shape[0] == 0:
        result.fail(plane="equilibrium", reason="no boundary found")
    elif worst >= EQUILIBRIUM_LINE_TOL:
        result.fail(plane="equilibrium", max_criterion_at_boundary=worst)
    return result


SUITES: Dict[str, Callable[[SuiteOptions], Awaitable[SuiteResult]]] = {
    "d4-c0": suite_d4_c0,
    "hypergeom": suite_hypergeom,
    "heun": suite_heun,
    "separatrix": suite_separatrix,
    "radon": suite_radon,
    "conservation": suite_conservation,
    "isochrony": suite_isochrony,
    "d1": suite_d1,
    "third-order": suite_third_order,
    "planes": suite_planes,
}


def suite_names(spec: str) -> List[str]:
    """'all' or a comma list of suite ids."""
    names = list(SUITES) if spec.strip() == "all" else [s.strip() for s in spec.split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown or not names:
        raise ConfigError(f"unknown suite(s) {unknown or spec!r}; available: {', '.join(SUITES)}", field="crossval.suite")
    return names


async def run_suite(name: str, opts: SuiteOptions) -> SuiteResult:
    fn = SUITES[name]
    try:
        result = await fn(opts)
    except EpBlowupError as exc:
        logger.warning("suite %s aborted: %s", name, exc)
        result = SuiteResult(name)
        result.fail(error=type(exc).__name__, message=str(exc))
    logger.info("suite %s: %s", name, "pass" if result.passed else "FAIL")
    return result
