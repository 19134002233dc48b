# python
"""
epblowup/linearization.py
The characteristic system coupled with the linear (q, p1, p2) system, q-zero
detection, direct integration of the Riccati system for (u, v), the
third-order consistency residual and the per-point blow-up classifier.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.optimize import brentq

from .characteristics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    ESCAPE_THRESHOLD,
    SEPARATRIX_MARGIN,
    blows_up_by_separatrix,
    linear_period,
    run_solver,
)
from .errors import DegenerateCriterionError, RegimeError
from .model import InitialPoint, Params, shift_values

logger = logging.getLogger(__name__)

SMOOTH_CERTIFIED = "smooth-certified"
SMOOTH_TO_HORIZON = "smooth-to-horizon"
BLOW_UP = "blow-up"

MECH_Q_ZERO = "q-zero"
MECH_ESCAPE = "trajectory-escape"
MECH_SEPARATRIX = "separatrix-certificate"
MECH_ANALYTIC = "analytic-criterion"

ROOT_TOL = 1e-10
UV_ESCAPE = 1e8
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class LinearState:
    q: float
    p1: float
    p2: float


@dataclass
class CoupledTrajectory:
    t: np.ndarray
    y: np.ndarray
    sol: Callable[[float], np.ndarray]
    escaped: bool = False
    t_escape: Optional[float] = None
    t_q_zero: Optional[float] = None

    def state(self, t: float) -> np.ndarray:
        return np.asarray(self.sol(t), dtype=float)

    def linear_state(self, t: float) -> LinearState:
        _, _, _, q, p1, p2 = self.state(t)
        return LinearState(float(q), float(p1), float(p2))

    @property
    def final(self) -> np.ndarray:
        return self.y[:, -1].copy()

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def q_min(self) -> float:
        return float(np.min(self.y[3]))


@dataclass(frozen=True)
class QZero:
    t: float
    boundary: bool = False


@dataclass
class UVTrajectory:
    t: np.ndarray
    y: np.ndarray
    sol: Callable[[float], np.ndarray]
    escaped: bool = False
    t_bracket: Optional[Tuple[float, float]] = None

    def uv(self, t: float) -> Tuple[float, float]:
        s = self.sol(t)
        return float(s[3]), float(s[4])


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    times: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CriterionReport:
    """Value of an analytic smoothness criterion; truthy when it predicts smoothness."""

    name: str
    value: float
    smooth: bool
    boundary: bool = False
    error: float = 0.0
    inputs: Dict[str, Any] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.smooth

    def to_record(self) -> Dict[str, Any]:
        return {
            "criterion": self.name,
            "inputs": dict(self.inputs),
            "value": self.value,
            "smooth": self.smooth,
            "boundary": self.boundary,
            "error": self.error,
            **self.extra,
        }


def criterion_report(name: str, value: float, error: float = 0.0, **inputs: Any) -> CriterionReport:
    # equality counts as non-smooth and is flagged
    boundary = abs(value) <= max(BOUNDARY_TOL, error)
    return CriterionReport(name, float(value), value > 0 and not boundary, boundary, float(error), inputs)


@dataclass(frozen=True)
class HorizonPolicy:
    periods: float = 50.0
    horizon: Optional[float] = None
    default_horizon: float = 200.0
    node_rate_multiple: float = 200.0
    node_chunk: float = 5.0
    node_eps: float = 1e-3
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    escape: float = ESCAPE_THRESHOLD
    root_tol: float = ROOT_TOL
    use_separatrix: bool = True
    separatrix_margin: float = SEPARATRIX_MARGIN

    def horizon_for(self, p: Params) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        if p.constant_c:
            disc = p.discriminant
            if disc > 0:
                return self.periods * linear_period(p)
            node = node_target(p)
            if node is not None:
                return self.node_rate_multiple / node[2]
        return self.default_horizon


DEFAULT_POLICY = HorizonPolicy()


@dataclass(frozen=True)
class BlowupVerdict:
    outcome: str
    mechanism: Optional[str]
    t_star: Optional[float]
    q_min: float
    horizon: float
    tail_bound: Optional[float] = None
    boundary: bool = False

    @property
    def blows_up(self) -> bool:
        return self.outcome == BLOW_UP

    @property
    def smooth(self) -> bool:
        return not self.blows_up

    def to_record(self, ip: Optional[InitialPoint] = None) -> Dict[str, Any]:
        rec: Dict[str, Any] = ip.to_record() if ip is not None else {}
        rec.update(
            {
                "outcome": self.outcome,
                "mechanism": self.mechanism,
                "t_star": self.t_star,
                "q_min": self.q_min,
                "horizon": self.horizon,
                "tail_bound": self.tail_bound,
                "boundary": self.boundary,
            }
        )
        return rec


# ------------------------------------------------------------ integration


def coupled_rhs(p: Params) -> Callable[[float, Sequence[float]], List[float]]:
    d, k, m, mu = p.d, p.k, p.m, p.mu

    def rhs(_t, y):
        r, F, G, q, p1, p2 = y
        c = p.c_at(r)
        return [
            F * r,
            -F * F - m - k * G - mu * F,
            c * F - d * F * G,
            p1,
            -d * (m + mu * F) * q - (2.0 * F + mu) * p1 - k * p2,
            p.c_prime_at(r) * r * F * q + (c - d * G) * p1 - d * F * p2,
        ]

    return rhs


def _q_zero_event(_t, y):
    return y[3]


_q_zero_event.terminal = True
_q_zero_event.direction = -1


def _escape_event(escape: float):
    def event(_t, y):
        return escape - max(abs(y[1]), abs(y[2]))

    event.terminal = True
    event.direction = -1
    return event


def initial_state(ip: InitialPoint) -> np.ndarray:
    return np.array([ip.r0, ip.F0, ip.G0, 1.0, ip.u0, ip.v0], dtype=float)


def integrate_coupled(
    p: Params,
    ip: InitialPoint,
    horizon: float,
    tol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    escape: float = ESCAPE_THRESHOLD,
    stop_at_q_zero: bool = True,
    t0: float = 0.0,
    y0: Optional[Sequence[float]] = None,
) -> CoupledTrajectory:
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    atol = DEFAULT_ATOL * tol / DEFAULT_RTOL if atol is None else atol
    start = initial_state(ip) if y0 is None else np.asarray(y0, dtype=float)
    events = [_escape_event(escape)]
    if stop_at_q_zero:
        events.append(_q_zero_event)
    sol = run_solver(coupled_rhs(p), (t0, t0 + horizon), start, rtol=tol, atol=atol, events=events,
                     what="coupled integration")
    escaped = sol.t_events[0].size > 0
    t_escape = float(sol.t_events[0][0]) if escaped else None
    t_q = float(sol.t_events[1][0]) if stop_at_q_zero and sol.t_events[1].size > 0 else None
    return CoupledTrajectory(sol.t, sol.y, sol.sol, escaped, t_escape, t_q)


def detect_q_zero(traj: CoupledTrajectory, root_tol: float = ROOT_TOL) -> Optional[QZero]:
    """
    Earliest zero of q. Sign changes are bracketed on the solver steps and
    refined with brentq; a local minimum of q within root_tol of zero without a
    sign change is reported as a boundary zero.
    """
    if traj.t_q_zero is not None:
        return QZero(traj.t_q_zero, False)

    def q_at(t: float) -> float:
        return float(traj.sol(t)[3])

    def p1_at(t: float) -> float:
        return float(traj.sol(t)[4])

    t, q, p1 = traj.t, traj.y[3], traj.y[4]
    for i in range(t.size - 1):
        a, b = float(t[i]), float(t[i + 1])
        if q[i] > 0 and q[i + 1] < 0:
            return QZero(brentq(q_at, a, b, xtol=root_tol), False)
        if p1[i] < 0 < p1[i + 1]:
            t_min = brentq(p1_at, a, b, xtol=root_tol)
            q_min = q_at(t_min)
            if q_min < -root_tol:
                return QZero(brentq(q_at, a, t_min, xtol=root_tol), False)
            if abs(q_min) <= root_tol:
                return QZero(t_min, True)
    return None


def direct_uv(
    p: Params,
    ip: InitialPoint,
    t_end: float,
    tol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    escape: float = UV_ESCAPE,
) -> UVTrajectory:
    d, k, m, mu = p.d, p.k, p.m, p.mu
    atol = DEFAULT_ATOL * tol / DEFAULT_RTOL if atol is None else atol

    def rhs(_t, y):
        r, F, G, u, v = y
        c = p.c_at(r)
        return [
            F * r,
            -F * F - m - k * G - mu * F,
            c * F - d * F * G,
            -u * u - (2.0 * F + mu) * u - k * v - d * (m + mu * F),
            -u * v + (c - d * G) * u - d * F * v + p.c_prime_at(r) * r * F,
        ]

    def blow(_t, y):
        return escape - max(abs(y[3]), abs(y[4]))

    blow.terminal = True
    blow.direction = -1
    y0 = [ip.r0, ip.F0, ip.G0, ip.u0, ip.v0]
    sol = run_solver(rhs, (0.0, t_end), y0, rtol=tol, atol=atol, events=[blow], what="direct (u, v) integration")
    escaped = sol.t_events[0].size > 0
    bracket = (float(sol.t[-2]), float(sol.t[-1])) if escaped and sol.t.size > 1 else None
    return UVTrajectory(sol.t, sol.y, sol.sol, escaped, bracket)


def third_order_coefficients(p: Params, state: Sequence[float]) -> Tuple[float, float, float]:
    r, F, G = state[0], state[1], state[2]
    d, k, m, mu = p.d, p.k, p.m, p.mu
    c, cp = p.c_at(r), p.c_prime_at(r)
    A2 = (2 + d) * F + mu
    A1 = 2 * (d - 1) * F * (F + mu) - k * G * (d + 2) + m * (d - 2) + k * c
    A0 = mu * d * (d - 1) * F * F + (m * d * d - mu * mu * d + k * cp * r) * F - mu * d * (m + k * G)
    return A2, A1, A0


def third_order_residual(
    traj: CoupledTrajectory, p: Params, n_samples: int = 400, h: float = 5e-3
) -> ResidualReport:
    """
    Residual of q''' + A2 q'' + A1 q' + A0 q = 0 along the trajectory, with
    q' = p1 and q'' = p1' from the system and q''' from a Richardson-extrapolated
    central difference of q'' along the dense output.
    """
    rhs = coupled_rhs(p)

    def q2(t: float) -> float:
        return rhs(t, traj.sol(t))[4]

    lo, hi = traj.t0 + 2 * h, traj.t_end - 2 * h
    if hi <= lo:
        raise ValueError("trajectory too short for the residual stencil")
    times = np.linspace(lo, hi, n_samples)
    res = np.empty_like(times)
    for i, t in enumerate(times):
        s = traj.sol(t)
        d_h = (q2(t + h) - q2(t - h)) / (2 * h)
        d_h2 = (q2(t + h / 2) - q2(t - h / 2)) / h
        q3 = (4.0 * d_h2 - d_h) / 3.0
        A2, A1, A0 = third_order_coefficients(p, s)
        res[i] = q3 + A2 * q2(t) + A1 * s[4] + A0 * s[3]
    return ResidualReport(float(np.max(np.abs(res))), times, res)


# ------------------------------------------------------------ node regime


def node_target(p: Params) -> Optional[Tuple[float, float, float]]:
    """(F*, G*, rho) for the stable node when m = 0, mu = 0, constant c."""
    if not p.analytic_regime or p.m != 0 or p.discriminant >= 0:
        return None
    F_star = math.sqrt(-p.k * p.c0 / p.d)
    return F_star, p.c0 / p.d, min(p.d * F_star, 2.0 * F_star)


def _node_matrix(p: Params, F_star: float) -> np.ndarray:
    # (q, p1, p2) system frozen at the stable node
    return np.array(
        [[0.0, 1.0, 0.0], [0.0, -2.0 * F_star, -p.k], [0.0, 0.0, -p.d * F_star]],
        dtype=float,
    )


def node_tail(p: Params, F_star: float, p1: float, p2: float) -> Tuple[float, float]:
    """
    (q_inf - q_T estimate, bound on int_T^inf |p1| dt) for the frozen-node
    system. The bound carries a 2x safety factor.
    """
    A = _node_matrix(p, F_star)[1:, 1:]
    x = np.array([p1, p2], dtype=float)
    drift = float(-np.linalg.solve(A, x)[0])
    rho = min(p.d * F_star, 2.0 * F_star)
    integral, _ = quad(lambda s: abs((expm(A * s) @ x)[0]), 0.0, 60.0 / rho, limit=200)
    return drift, 2.0 * integral


def equilibrium_criterion(p: Params, u0: float, v0: float) -> CriterionReport:
    """
    Data sitting at the stable node. The value is the limit of q,
    1 - (d F* u0 - k v0) / (c - d (G* + 2 F*^2)); the solution is smooth when the
    limit and the interior minimum of q are both positive.
    """
    p.require_analytic("equilibrium_criterion")
    if p.m != 0:
        raise RegimeError("equilibrium_criterion expects the shifted form (m = 0)")
    if not (p.k < 0 and p.c0 > 0):
        raise RegimeError("equilibrium_criterion needs k < 0 and c > 0")
    F_star = math.sqrt(-p.k * p.c0 / p.d)
    G_star = p.c0 / p.d
    denom = p.c0 - p.d * (G_star + 2.0 * F_star**2)
    if denom == 0.0:
        raise DegenerateCriterionError("equilibrium criterion denominator vanishes")
    value = 1.0 - (p.d * F_star * u0 - p.k * v0) / denom

    B = _node_matrix(p, F_star)
    x0 = np.array([1.0, u0, v0])
    rho = min(p.d * F_star, 2.0 * F_star)
    times = np.linspace(0.0, 40.0 / rho, 801)
    states = np.array([expm(B * t) @ x0 for t in times])
    q_min = float(np.min(states[:, 0]))
    t_min = float(times[int(np.argmin(states[:, 0]))])
    p1 = states[:, 1]
    for i in range(times.size - 1):
        if p1[i] < 0 < p1[i + 1]:
            t_min = brentq(lambda t: (expm(B * t) @ x0)[1], times[i], times[i + 1], xtol=1e-13)
            q_min = min(q_min, float((expm(B * t_min) @ x0)[0]))
            break
    report = criterion_report("equilibrium", min(value, q_min), u0=u0, v0=v0, d=p.d, k=p.k, c=p.c0)
    return CriterionReport(
        report.name,
        value,
        report.smooth,
        report.boundary,
        0.0,
        report.inputs,
        {"q_limit": value, "q_min": q_min, "t_min": t_min},
    )


# ------------------------------------------------------------ classification


def _separatrix_applies(p: Params, ip: InitialPoint) -> bool:
    if not p.analytic_regime or p.d < 3:
        return False
    ps, Gs, _ = shift_values(p, ip.G0, 0.0)
    return ps.k < 0 and ps.c0 > 0 and Gs < ps.c0 / ps.d


def classify_point(p: Params, ip: InitialPoint, policy: HorizonPolicy = DEFAULT_POLICY) -> BlowupVerdict:
    if p.m != 0 and p.analytic_regime:
        # classify in zero-equilibrium coordinates, where the node test and tail bound apply
        ps, Gs, vs = shift_values(p, ip.G0, ip.v0)
        logger.debug("shifted %s to %s before classification", p, ps)
        return classify_point(ps, InitialPoint(ip.r0, ip.F0, Gs, ip.u0, vs), policy)
    certificate = False
    if policy.use_separatrix and _separatrix_applies(p, ip):
        certificate = blows_up_by_separatrix(p, ip.F0, ip.G0, policy.separatrix_margin)
    horizon = policy.horizon_for(p)
    node = node_target(p) if ip.G0 <= (p.c0 / p.d if p.constant_c else math.inf) else None
    chunk = policy.node_chunk / node[2] if node is not None else horizon
    escape_mech = MECH_SEPARATRIX if certificate else MECH_ESCAPE
    zero_mech = MECH_SEPARATRIX if certificate else MECH_Q_ZERO

    t0, y0 = 0.0, initial_state(ip)
    q_min = 1.0
    boundary = False
    while True:
        t1 = min(horizon, t0 + chunk)
        traj = integrate_coupled(p, ip, t1 - t0, policy.rtol, policy.atol, policy.escape, t0=t0, y0=y0)
        q_min = min(q_min, traj.q_min)
        hit = detect_q_zero(traj, policy.root_tol)
        if hit is not None and not hit.boundary:
            logger.debug("q vanishes at t=%g for %s", hit.t, ip)
            return BlowupVerdict(BLOW_UP, zero_mech, hit.t, min(q_min, 0.0), horizon, None, boundary)
        if hit is not None:
            boundary = True
        if traj.escaped:
            return BlowupVerdict(BLOW_UP, escape_mech, traj.t_escape, q_min, horizon, None, boundary)
        if node is not None:
            F_star, G_star, _rho = node
            _r, F, G, q, p1, p2 = traj.final
            if abs(F - F_star) < policy.node_eps and abs(G - G_star) < policy.node_eps:
                _drift, tail = node_tail(p, F_star, p1, p2)
                if q - tail > 0 and q_min > 0:
                    return BlowupVerdict(SMOOTH_CERTIFIED, None, None, q_min, traj.t_end, tail, boundary)
        if t1 >= horizon:
            break
        t0, y0 = t1, traj.final
    if certificate:
        logger.warning("separatrix certificate without observed escape before t=%g", horizon)
        return BlowupVerdict(BLOW_UP, MECH_SEPARATRIX, horizon, q_min, horizon, None, True)
    boundary = boundary or abs(q_min) <= policy.root_tol
    return BlowupVerdict(SMOOTH_TO_HORIZON, None, None, q_min, horizon, None, boundary)


def classify_many(p: Params, points: Sequence[InitialPoint], policy: HorizonPolicy = DEFAULT_POLICY) -> List[BlowupVerdict]:
    return [classify_point(p, ip, policy) for ip in points]
