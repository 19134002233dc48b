# python
"""
epblowup/special.py
Real-argument kernels for the Gauss hypergeometric function 2F1 and local
solutions of the Heun equation.

2F1 uses the power series for z <= 1/2, the Pfaff transformation for z < 0 and
the connection formula around z = 1 for z > 1/2. When c - a - b is an integer
(logarithmic case) the hypergeometric ODE is integrated from z = 1/2 instead.

Heun local solutions use the three-term recurrence inside the disc of
convergence and DOP853 continuation of the Heun ODE outside it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma as gamma_fn
from scipy.special import rgamma

from .errors import ContinuationNeeded, SingularPathError, SpecialFunctionError

logger = logging.getLogger(__name__)

SERIES_MAX_TERMS = 5000
SERIES_RTOL = 1e-17
SERIES_SWITCH = 0.5
INTEGER_TOL = 1e-9
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
HEUN_RADIUS_FRACTION = 0.9


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and abs(x - round(x)) < INTEGER_TOL


@dataclass(frozen=True)
class Hyp2F1Params:
    a: float
    b: float
    c: float
    z: float

    def __post_init__(self) -> None:
        if _is_nonpositive_integer(self.c):
            raise SpecialFunctionError("2F1 undefined for nonpositive integer c", self.as_dict())
        if not self.z < 1.0:
            raise SpecialFunctionError("2F1 real branch needs z < 1", self.as_dict())

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "z": self.z}

    @property
    def terminates(self) -> bool:
        return _is_nonpositive_integer(self.a) or _is_nonpositive_integer(self.b)


@dataclass(frozen=True)
class NearOneSplit:
    """2F1(z) = regular(z) + (1 - z)**exponent * singular(z), with z-derivatives."""

    regular: float
    regular_prime: float
    singular: float
    singular_prime: float
    exponent: float

    def value(self, z: float) -> float:
        return self.regular + (1.0 - z) ** self.exponent * self.singular


def _series_2f1(a: float, b: float, c: float, z: float) -> float:
    term = 1.0
    total = 1.0
    small = 0
    for n in range(SERIES_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= SERIES_RTOL * abs(total):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise SpecialFunctionError("2F1 series did not converge", {"a": a, "b": b, "c": c, "z": z})


def _connection_coefficients(a: float, b: float, c: float) -> Tuple[float, float, float]:
    s = c - a - b
    A = gamma_fn(c) * gamma_fn(s) * rgamma(c - a) * rgamma(c - b)
    B = gamma_fn(c) * gamma_fn(-s) * rgamma(a) * rgamma(b)
    return float(A), float(B), s


def _ode_continue_2f1(a: float, b: float, c: float, z: float) -> float:
    z0 = SERIES_SWITCH
    w0 = _series_2f1(a, b, c, z0)
    dw0 = a * b / c * _series_2f1(a + 1, b + 1, c + 1, z0)

    def rhs(x, y):
        return [y[1], (a * b * y[0] - (c - (a + b + 1.0) * x) * y[1]) / (x * (1.0 - x))]

    sol = solve_ivp(rhs, (z0, z), [w0, dw0], method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL)
    if not sol.success:
        raise SpecialFunctionError(f"2F1 continuation failed: {sol.message}", {"a": a, "b": b, "c": c, "z": z})
    return float(sol.y[0, -1])


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    return gauss_2f1(Hyp2F1Params(a, b, c, z))


def gauss_2f1(params: Hyp2F1Params) -> float:
    a, b, c, z = params.a, params.b, params.c, params.z
    if z == 0.0:
        return 1.0
    if params.terminates or 0.0 <= z <= SERIES_SWITCH:
        return _series_2f1(a, b, c, z)
    if z < 0.0:
        # Pfaff: argument z/(z-1) lies in (0, 1)
        return (1.0 - z) ** (-a) * gauss_2f1(Hyp2F1Params(a, c - b, c, z / (z - 1.0)))
    s = c - a - b
    if abs(s - round(s)) < INTEGER_TOL:
        logger.debug("2F1 logarithmic case a=%g b=%g c=%g, continuing the ODE to z=%g", a, b, c, z)
        return _ode_continue_2f1(a, b, c, z)
    split = hyp2f1_near_one(params)
    return split.value(z)


def gauss_2f1_derivative(params: Hyp2F1Params) -> float:
    a, b, c = params.a, params.b, params.c
    return a * b / c * gauss_2f1(Hyp2F1Params(a + 1.0, b + 1.0, c + 1.0, params.z))


def hyp2f1_near_one(params: Hyp2F1Params) -> NearOneSplit:
    """Connection formula around z = 1; needs a non-integer c - a - b."""
    a, b, c, z = params.a, params.b, params.c, params.z
    A, B, s = _connection_coefficients(a, b, c)
    if abs(s - round(s)) < INTEGER_TOL:
        raise SpecialFunctionError("connection formula unsupported for integer c-a-b", params.as_dict())
    y = 1.0 - z
    reg = A * hyp2f1(a, b, 1.0 - s, y) if A != 0.0 else 0.0
    reg_p = -A * a * b / (1.0 - s) * hyp2f1(a + 1, b + 1, 2.0 - s, y) if A != 0.0 else 0.0
    sing = B * hyp2f1(c - a, c - b, 1.0 + s, y) if B != 0.0 else 0.0
    sing_p = (
        -B * (c - a) * (c - b) / (1.0 + s) * hyp2f1(c - a + 1, c - b + 1, 2.0 + s, y) if B != 0.0 else 0.0
    )
    return NearOneSplit(reg, reg_p, sing, sing_p, s)


# ---------------------------------------------------------------- Heun


@dataclass(frozen=True)
class HeunParams:
    a: float
    q: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if self.a in (0.0, 1.0):
            raise SpecialFunctionError("Heun singular point a must differ from 0 and 1", self.as_dict())
        if _is_nonpositive_integer(self.gamma):
            raise SpecialFunctionError("no local Heun solution for nonpositive integer gamma", self.as_dict())

    @property
    def epsilon(self) -> float:
        # Fuchs relation
        return self.alpha + self.beta - self.gamma - self.delta + 1.0

    @property
    def radius(self) -> float:
        return min(1.0, abs(self.a))

    @property
    def singular_points(self) -> Tuple[float, float, float]:
        return (0.0, 1.0, self.a)

    def at(self, z: float) -> "HeunParams":
        return replace(self, z=float(z))

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "q": self.q,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "z": self.z,
        }

    def rhs(self, z: float, y: Sequence[float]) -> List[float]:
        w, dw = y[0], y[1]
        p = self.gamma / z + self.delta / (z - 1.0) + self.epsilon / (z - self.a)
        s = (self.alpha * self.beta * z - self.q) / (z * (z - 1.0) * (z - self.a))
        return [dw, -p * dw - s * w]


@dataclass(frozen=True)
class HeunValue:
    value: float
    derivative: float
    error: float = 0.0
    z: float = 0.0


def heun_series_coefficients(a, q, alpha, beta, gamma, delta, n: int) -> list:
    """
    First n+1 coefficients of the local solution at 0 normalized to w(0) = 1.
    Generic arithmetic, so Fraction inputs give exact coefficients.
    """
    eps = alpha + beta - gamma - delta + 1
    coeffs = [a * 0 + 1]
    if n == 0:
        return coeffs
    coeffs.append(q / (gamma * a))
    for j in range(1, n):
        r_j = a * (j + 1) * (j + gamma)
        q_j = j * ((j - 1 + gamma) * (1 + a) + a * delta + eps) + q
        p_j = (j - 1 + alpha) * (j - 1 + beta)
        coeffs.append((q_j * coeffs[j] - p_j * coeffs[j - 1]) / r_j)
    return coeffs


def heun_local(params: HeunParams) -> HeunValue:
    z = params.z
    if z == 0.0:
        return HeunValue(1.0, params.q / (params.gamma * params.a), 0.0, 0.0)
    if abs(z) >= HEUN_RADIUS_FRACTION * params.radius:
        raise ContinuationNeeded("Heun series too close to its radius of convergence", params.as_dict())
    a, q = params.a, params.q
    al, be, ga, de, ep = params.alpha, params.beta, params.gamma, params.delta, params.epsilon
    c_prev, c_cur = 1.0, q / (ga * a)
    value = 1.0 + c_cur * z
    deriv = c_cur
    zpow = z  # z**j for the current coefficient c_j
    small = 0
    last_terms: List[float] = []
    for j in range(1, SERIES_MAX_TERMS):
        r_j = a * (j + 1) * (j + ga)
        q_j = j * ((j - 1 + ga) * (1 + a) + a * de + ep) + q
        p_j = (j - 1 + al) * (j - 1 + be)
        c_next = (q_j * c_cur - p_j * c_prev) / r_j
        deriv += (j + 1) * c_next * zpow
        zpow *= z
        term = c_next * zpow
        value += term
        last_terms = (last_terms + [abs(term)])[-3:]
        c_prev, c_cur = c_cur, c_next
        if abs(term) <= SERIES_RTOL * max(abs(value), 1e-300) and abs((j + 1) * c_next * zpow / z) <= 1e-15 * max(
            abs(deriv), 1e-300
        ):
            small += 1
            if small >= 3:
                return HeunValue(value, deriv, float(sum(last_terms)), z)
        else:
            small = 0
    raise ContinuationNeeded("Heun series converging too slowly", params.as_dict())


class HeunPath:
    """Dense ODE continuation of a Heun solution along a real segment."""

    def __init__(self, params: HeunParams, seed: HeunValue, z_end: float):
        lo, hi = sorted((seed.z, z_end))
        for s in params.singular_points:
            if lo <= s <= hi:
                raise SingularPathError(
                    f"continuation path [{lo}, {hi}] meets singular point {s}", params.as_dict()
                )
        self.params = params
        self.z_start = seed.z
        self.z_end = float(z_end)
        scale = max(abs(seed.value), abs(seed.derivative), 1.0)
        self._sol = solve_ivp(
            params.rhs,
            (seed.z, z_end),
            [seed.value, seed.derivative],
            method="DOP853",
            rtol=ODE_RTOL,
            atol=ODE_ATOL * scale,
            dense_output=True,
        )
        if not self._sol.success:
            raise SpecialFunctionError(f"Heun continuation failed: {self._sol.message}", params.as_dict())

    def __call__(self, z: float) -> HeunValue:
        lo, hi = sorted((self.z_start, self.z_end))
        if not lo - 1e-14 <= z <= hi + 1e-14:
            raise SpecialFunctionError(f"z={z} outside continuation path [{lo}, {hi}]", self.params.as_dict())
        w, dw = self._sol.sol(z)
        return HeunValue(float(w), float(dw), 0.0, float(z))

    @property
    def end(self) -> HeunValue:
        return HeunValue(float(self._sol.y[0, -1]), float(self._sol.y[1, -1]), 0.0, self.z_end)


def heun_continue(params: HeunParams, z_target: float, seed: HeunValue) -> HeunValue:
    if z_target == seed.z:
        return seed
    return HeunPath(params, seed, z_target).end


def heun_evaluate(params: HeunParams) -> HeunValue:
    """Local solution at params.z: series inside the radius, continuation outside."""
    try:
        return heun_local(params)
    except ContinuationNeeded:
        z_seed = math.copysign(0.5 * params.radius, params.z)
        seed = heun_local(params.at(z_seed))
        return heun_continue(params, params.z, seed)


def heun_ode_residual(params: HeunParams, h: float = 1e-5) -> float:
    """Central-difference residual of the Heun ODE at params.z."""
    z = params.z
    w = np.array([heun_evaluate(params.at(z + k * h)).value for k in (-1, 0, 1)])
    d1 = (w[2] - w[0]) / (2 * h)
    d2 = (w[2] - 2 * w[1] + w[0]) / h**2
    _, rhs2 = params.rhs(z, [w[1], d1])
    return float(d2 - rhs2)
