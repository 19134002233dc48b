# python
"""
epblowup/characteristics.py
Dynamics along one characteristic: r' = F r, G' = c(r) F - d F G,
F' = -F^2 - m - k G - mu F. Integration, first integrals, the conserved
mass, the saddle separatrix, periods of closed orbits and isochronicity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import (
    IntegrationFailure,
    NotPeriodicError,
    OutOfHalfPlaneError,
    RegimeError,
    SingularInputError,
    UnsupportedDimensionError,
)
from .model import Params, classify_equilibria, shift_values

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
ESCAPE_THRESHOLD = 1e6
SEPARATRIX_MARGIN = 1e-9
SECTION_SKIP = 0.05
MAX_PERIODS = 100.0


@dataclass(frozen=True)
class CharacteristicState:
    t: float
    r: float
    F: float
    G: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.F, self.G], dtype=float)


@dataclass(frozen=True)
class FirstIntegralConstant:
    value: float
    form: str  # "d2-log" or "general-d"


@dataclass
class CharTrajectory:
    t: np.ndarray
    y: np.ndarray
    sol: Callable[[float], np.ndarray]
    escaped: bool = False
    t_escape: Optional[float] = None
    t_events: Tuple[np.ndarray, ...] = ()

    def state(self, t: float) -> CharacteristicState:
        r, F, G = self.sol(t)
        return CharacteristicState(float(t), float(r), float(F), float(G))

    @property
    def final(self) -> CharacteristicState:
        return CharacteristicState(float(self.t[-1]), *map(float, self.y[:, -1]))

    @property
    def t_end(self) -> float:
        return float(self.t[-1])


def characteristic_rhs(p: Params) -> Callable[[float, Sequence[float]], List[float]]:
    d, k, m, mu = p.d, p.k, p.m, p.mu

    def rhs(_t, y):
        r, F, G = y[0], y[1], y[2]
        return [F * r, -F * F - m - k * G - mu * F, p.c_at(r) * F - d * F * G]

    return rhs


def _escape_event(escape: float, first: int = 1):
    def event(_t, y):
        return escape - max(abs(y[first]), abs(y[first + 1]))

    event.terminal = True
    event.direction = -1
    return event


def run_solver(rhs, t_span, y0, *, rtol, atol, events=(), what="integration"):
    """solve_ivp(DOP853, dense output); failures carry the last accepted state."""
    sol = solve_ivp(
        rhs, t_span, y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True, events=list(events) or None
    )
    if sol.status == -1:
        t_last = float(sol.t[-1]) if sol.t.size else float(t_span[0])
        y_last = sol.y[:, -1] if sol.y.size else np.asarray(y0, dtype=float)
        raise IntegrationFailure(f"{what} failed: {sol.message}", t_last, y_last)
    return sol


def integrate_characteristic(
    p: Params,
    s0: CharacteristicState,
    t_end: float,
    tol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    escape: float = ESCAPE_THRESHOLD,
    events: Sequence[Callable] = (),
) -> CharTrajectory:
    if tol <= 0:
        raise ValueError("tolerance must be > 0")
    atol = DEFAULT_ATOL * tol / DEFAULT_RTOL if atol is None else atol
    all_events = [_escape_event(escape)] + list(events)
    sol = run_solver(
        characteristic_rhs(p),
        (s0.t, s0.t + t_end),
        s0.as_array(),
        rtol=tol,
        atol=atol,
        events=all_events,
        what="characteristic integration",
    )
    escaped = sol.status == 1 and sol.t_events[0].size > 0
    t_escape = float(sol.t_events[0][0]) if escaped else None
    if escaped:
        logger.debug("characteristic escaped at t=%g", t_escape)
    return CharTrajectory(sol.t, sol.y, sol.sol, escaped, t_escape, tuple(sol.t_events[1:]))


# ------------------------------------------------------------ first integrals


def first_integral(p: Params, F: float, G: float) -> FirstIntegralConstant:
    p.require_analytic("first_integral")
    d, k, c, m = p.d, p.k, p.c0, p.m
    if d == 2:
        w = 2.0 * G - c
        if w == 0.0:
            raise SingularInputError("d=2 first integral is singular at 2G = c")
        return FirstIntegralConstant((2.0 * F * F + k * c + 2.0 * m) / w - k * math.log(abs(w)), "d2-log")
    base = abs(d * G - c)
    if base == 0.0:
        raise SingularInputError("first integral is singular at d*G = c")
    value = ((F * F + m) * (d - 2) - k * (2.0 * G - c)) / ((d - 2) * base ** (2.0 / d))
    return FirstIntegralConstant(value, "general-d")


def first_integral_F2(p: Params, C: float, G: float) -> float:
    """F^2 on the level curve of the first integral with constant C."""
    p.require_analytic("first_integral_F2")
    d, k, c, m = p.d, p.k, p.c0, p.m
    if d == 2:
        w = 2.0 * G - c
        return ((C + k * math.log(abs(w))) * w - k * c - 2.0 * m) / 2.0
    return C * abs(d * G - c) ** (2.0 / d) + k * (2.0 * G - c) / (d - 2) - m


def conserved_mass(p: Params, r: float, G: float) -> float:
    return (p.c0 - p.d * G) * r**p.d


def reconstruct_divergences(F: float, G: float, u: float, v: float, p: Params) -> Tuple[float, float, float]:
    d = p.d
    D = u + d * F
    lam = v + d * G
    J = (2.0 * (d - 1) * D * F - (d - 1) * d * F * F) / 2.0
    return D, lam, J


# ------------------------------------------------------------ separatrix


def _attractive_shifted(p: Params, G: float, what: str) -> Tuple[Params, float]:
    p.require_analytic(what)
    ps, Gs, _ = shift_values(p, G, 0.0)
    if not (ps.k < 0 and ps.c0 > 0):
        raise RegimeError(f"{what} needs k < 0 and c > 0 (after the equilibrium shift)")
    if Gs >= ps.c0 / ps.d:
        raise OutOfHalfPlaneError(f"{what} needs G < c/d")
    return ps, Gs


def separatrix_F2(p: Params, G: float) -> float:
    if p.d == 2:
        raise UnsupportedDimensionError("d = 2 separatrix has a logarithmic form: use separatrix_F2_d2")
    ps, Gs = _attractive_shifted(p, G, "separatrix_F2")
    k, c, d = ps.k, ps.c0, ps.d
    return k * c / (d - 2) * ((1.0 - d * Gs / c) ** (2.0 / d) + 2.0 * Gs / c - 1.0)


def separatrix_F2_d2(p: Params, G: float) -> float:
    if p.d != 2:
        raise UnsupportedDimensionError("separatrix_F2_d2 is the d = 2 form")
    ps, Gs = _attractive_shifted(p, G, "separatrix_F2_d2")
    k, c = ps.k, ps.c0
    w = 2.0 * Gs - c
    return k / 2.0 * (w * (math.log((c - 2.0 * Gs) / c) - 1.0) - c)


def separatrix_threshold(p: Params, G0: float) -> float:
    """F value of the saddle's stable branch above G0; points below it escape."""
    sep = separatrix_F2_d2(p, G0) if p.d == 2 else separatrix_F2(p, G0)
    _, Gs, _ = shift_values(p, G0, 0.0)
    return -float(np.sign(Gs)) * math.sqrt(max(sep, 0.0))


def blows_up_by_separatrix(p: Params, F0: float, G0: float, margin: float = SEPARATRIX_MARGIN) -> bool:
    return F0 < separatrix_threshold(p, G0) - margin


def separatrix_curve(p: Params, n: int = 200, G_min: Optional[float] = None) -> np.ndarray:
    """Rows (G, F_threshold, -F_threshold) sampled on [G_min, c/d)."""
    ps, _, _ = shift_values(p, 0.0, 0.0)
    G_top = ps.c0 / ps.d
    G_min = -2.0 * max(G_top, 1.0) if G_min is None else G_min
    rows = []
    for G in np.linspace(G_min, G_top * (1.0 - 1e-9), n):
        # report in the caller's (unshifted) coordinates
        G_orig = G - p.m / p.k if ps.k == p.k else -G - p.m / p.k
        F = separatrix_threshold(p, G_orig)
        rows.append((G_orig, F, -F))
    return np.array(rows)


# ------------------------------------------------------------ orbits


def closed_orbit_criterion(p: Params, F0: float, G0: float) -> bool:
    p.require_analytic("closed_orbit_criterion")
    if p.d == 1:
        return F0 * F0 < p.k * (p.c0 - 2.0 * G0) - p.m
    if p.k > 0 and p.discriminant > 0:
        return G0 < p.c0 / p.d
    raise RegimeError("closed-orbit criterion needs d = 1, or k > 0 in the center regime")


def d1_bounded_c0(F0: float, G0: float) -> bool:
    # F0 >= 0 is read as unconditionally bounded
    return F0 >= 0 or F0 * F0 < -2.0 * G0


def lienard_f(p: Params, y: float) -> float:
    return (2 + p.d) * y


def lienard_g(p: Params, y: float) -> float:
    return (p.c0 * p.k + p.m * p.d) * y + p.d * y**3


def tau(p: Params, y: float) -> float:
    """Isochronicity test function; identically zero iff the center is isochronous."""
    integral, _ = quad(lambda s: s * lienard_f(p, s), 0.0, y, epsabs=1e-14)
    g_prime0 = p.c0 * p.k + p.m * p.d
    return integral**2 - y**3 * (lienard_g(p, y) - g_prime0 * y)


def linear_period(p: Params) -> float:
    disc = p.discriminant
    if disc <= 0:
        raise RegimeError("linear period defined only in the center regime (c*k + m*d > 0)")
    return 2.0 * math.pi / math.sqrt(disc)


def is_isochronous(p: Params) -> bool:
    p.require_analytic("is_isochronous")
    if p.discriminant <= 0:
        raise RegimeError("isochronicity is defined for the center regime only")
    return (2 + p.d) ** 2 == 9 * p.d


def decay_rates(p: Params) -> Tuple[float, float]:
    """Exponential rates (d F*, 2 F*) of the linearization at the stable node."""
    node = classify_equilibria(p).of_kind("stable-node")
    if node is None:
        raise RegimeError("decay rates exist only in the node regime (c*k + m*d < 0)")
    return p.d * node.F, 2.0 * node.F


def period_of_orbit(p: Params, F0: float, G0: float, tol: float = DEFAULT_RTOL) -> float:
    """First-return time to a section through (F0, G0), crossing in the starting direction."""
    p.require_analytic("period_of_orbit")
    T_lin = linear_period(p)
    rhs = characteristic_rhs(p)
    _, dF0, dG0 = rhs(0.0, [1.0, F0, G0])
    if dF0 == 0.0 and dG0 == 0.0:
        raise NotPeriodicError("starting point is an equilibrium")
    if abs(dG0) >= abs(dF0):
        index, level, direction = 2, G0, math.copysign(1.0, dG0)
    else:
        index, level, direction = 1, F0, math.copysign(1.0, dF0)

    def section(_t, y):
        return y[index] - level

    section.terminal = True
    section.direction = direction

    skip = SECTION_SKIP * T_lin
    first = integrate_characteristic(p, CharacteristicState(0.0, 1.0, F0, G0), skip, tol)
    if first.escaped:
        raise NotPeriodicError("orbit escaped before reaching the section")
    second = integrate_characteristic(p, first.final, MAX_PERIODS * T_lin - skip, tol, events=[section])
    hits = second.t_events[0] if second.t_events else np.array([])
    if second.escaped or hits.size == 0:
        raise NotPeriodicError(f"no return to the section within {MAX_PERIODS:g} linear periods")
    return float(hits[0])
