# python
"""
epblowup/mcriteria.py
Smoothness criteria in the M chart, M = |c - d G|^(2/d).

Along a characteristic with m = 0, mu = 0 the first integral gives F^2 as a
function of M, and eliminating time from the linear (q, p1, p2) system leaves
the second-order equation

    Y'' + S1(M) Y' + S2(M) Y = 0,   Y = p1,

with S1 = (F^2)'/(2F^2) - d/(2M) and S2 = Q1/(4 F^2 M^2), where
Q1 = 2(d-1)F^2 - k(d+2)G + kc. M decreases while F > 0 (dM/dt = -2FM).

Layout:
  MChart / m_chart         F^2(M), G(M), turning points
  YCoefficients            S1, S2 and the (q, P, R) system coefficients
  FundamentalPair          Y1 and Ybar2 (Ybar2(M0) = 0) from one of three routes:
                           hypergeometric (k = 1, c = 0), Heun (d = 4, k = -1,
                           c = 1) or Frobenius start plus ODE integration
  compute_C2               Richardson limit at the regular singular point M0
  criterion_*              1 + C2 * int_0^M0 Ybar2 / (2 M F) dM
  q_of_M                   q along the M-parameterised branch for general data

Every Ybar2 is normalized so that Ybar2 ~ -M0^(3/2) sqrt(M0 - M) as M -> M0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .characteristics import first_integral, run_solver
from .errors import (
    DegenerateCriterionError,
    IntegrationFailure,
    InvalidInputError,
    LimitFailure,
    OutOfHalfPlaneError,
    RegimeError,
    SingularInputError,
    UnsupportedDimensionError,
)
from .linearization import CriterionReport, coupled_rhs, criterion_report
from .model import EnclosedFieldProfile, Params, RadialProfile, shift_values
from .special import HeunParams, HeunPath, HeunValue, heun_local, hyp2f1

logger = logging.getLogger(__name__)

Y_RTOL = 1e-12
Y_ATOL = 1e-14
FROBENIUS_OFFSET = 1e-5
ORIGIN_CUTOFF = 1e-9
HEUN_TOP = 1e-10
C2_EPS0 = 1e-2
C2_LEVELS = 7
C2_RTOL = 1e-8
INTEGRAL_EPSABS = 1e-10
WRONSKIAN_TOL = 1e-10
Q_RTOL = 1e-10
Q_ATOL = 1e-12
M_FLOOR = 1e-9
SWITCH_FRACTION = 0.5


# ---------------------------------------------------------------- chart


@dataclass(frozen=True)
class MChart:
    """Shifted (m = 0) constants of one characteristic in the M chart."""

    d: int
    k: float
    c: float
    C: float
    M0: float
    F0: float
    G0: float

    @property
    def params(self) -> Params:
        return Params(self.d, self.k, self.c)

    def F2(self, M: float) -> float:
        d, k = self.d, self.k
        return self.C * M - 2.0 * k * M ** (d / 2.0) / (d * (d - 2)) - k * self.c / d

    def dF2(self, M: float) -> float:
        return self.C - self.k * M ** (self.d / 2.0 - 1.0) / (self.d - 2)

    def F(self, M: float) -> float:
        """Positive root; the branch travelled while M decreases."""
        return math.sqrt(max(self.F2(M), 0.0))

    def G(self, M: float) -> float:
        return (self.c - M ** (self.d / 2.0)) / self.d

    def M_of_G(self, G: float) -> float:
        return (self.c - self.d * G) ** (2.0 / self.d)

    def Q1(self, M: float) -> float:
        d, k = self.d, self.k
        return 2.0 * (d - 1) * self.F2(M) - k * (d + 2) * self.G(M) + k * self.c

    @property
    def M_plus(self) -> float:
        """Largest M reached: the turning point above M0 when F0 < 0, else M0."""
        if self.F0 >= 0:
            return self.M0
        if self.d == 4 and self.k == 1 and self.c == 0:
            return (4.0 * self.F0**2 + self.M0**2) / self.M0
        hi = 2.0 * self.M0
        for _ in range(80):
            if self.F2(hi) < 0:
                return brentq(self.F2, self.M0, hi, xtol=1e-14 * hi)
            hi *= 2.0
        raise RegimeError("F^2 stays positive above M0: the orbit has no upper turning point")

    def to_record(self) -> dict:
        return {"d": self.d, "k": self.k, "c": self.c, "C": self.C, "M0": self.M0, "F0": self.F0, "G0": self.G0}


def m_chart(p: Params, F0: float, G0: float) -> MChart:
    p.require_analytic("m_chart")
    if p.d < 3:
        raise UnsupportedDimensionError(f"the M chart needs d >= 3, got {p.d}")
    ps, Gs, _ = shift_values(p, G0, 0.0)
    if not Gs < ps.c0 / ps.d:
        raise OutOfHalfPlaneError(f"M chart needs G0 < c/d (shifted G0={Gs}, c/d={ps.c0 / ps.d})")
    M0 = (ps.c0 - ps.d * Gs) ** (2.0 / ps.d)
    C = first_integral(ps, F0, Gs).value
    return MChart(ps.d, ps.k, ps.c0, C, M0, float(F0), Gs)


@dataclass(frozen=True)
class YCoefficients:
    chart: MChart

    def _check(self, M: float) -> float:
        F2 = self.chart.F2(M)
        if M <= 0 or F2 <= 0:
            raise SingularInputError(f"regular singular point of the Y equation at M={M} (F^2={F2})")
        return F2

    def S1(self, M: float) -> float:
        F2 = self._check(M)
        return self.chart.dF2(M) / (2.0 * F2) - self.chart.d / (2.0 * M)

    def S2(self, M: float) -> float:
        F2 = self._check(M)
        return self.chart.Q1(M) / (4.0 * F2 * M * M)

    @staticmethod
    def Q0(_M: float) -> float:
        return 0.0

    def Q1(self, M: float) -> float:
        return self.chart.Q1(M)

    def Q2(self, M: float) -> float:
        return (2 + self.chart.d) * self.chart.F(M)

    def rhs(self, M: float, y) -> list:
        return [y[1], -self.S1(M) * y[1] - self.S2(M) * y[0]]


def y_coefficients(chart: MChart) -> YCoefficients:
    return YCoefficients(chart)


def ode_Y_coeffs(chart: MChart, M: float) -> Tuple[float, float]:
    coeffs = YCoefficients(chart)
    return coeffs.S1(M), coeffs.S2(M)


def y_equation_residual(chart: MChart, M: float, Y: float, dY: float, d2Y: float) -> float:
    S1, S2 = ode_Y_coeffs(chart, M)
    return d2Y + S1 * dY + S2 * Y


# ---------------------------------------------------------------- fundamental pairs


class FundamentalPair:
    """
    Solutions Y1, Ybar2 of the Y equation on (0, M0].

    Ybar2(M0) = 0 and Ybar2 ~ -M0^(3/2) sqrt(M0 - M) near M0.
    """

    route = "abstract"

    def __init__(self, M0: float):
        if not M0 > 0:
            raise InvalidInputError(f"M0 must be > 0, got {M0}")
        self.M0 = float(M0)

    def Y1(self, M: float) -> float:
        raise NotImplementedError

    def Y1_prime(self, M: float) -> float:
        raise NotImplementedError

    def Ybar2(self, M: float) -> float:
        raise NotImplementedError

    def Ybar2_prime(self, M: float) -> float:
        raise NotImplementedError

    def wronskian(self, M: float) -> float:
        return self.Y1(M) * self.Ybar2_prime(M) - self.Y1_prime(M) * self.Ybar2(M)

    def normalization(self) -> dict:
        return {"route": self.route, "M0": self.M0, "Y1(M0)": self.Y1(self.M0), "Ybar2(M0)": 0.0}


class HypergeometricPair(FundamentalPair):
    """
    k = 1, c = 0, F0 = 0. With s = (d-2)/2 and x = (M/M0)^s:

      Y1    = (M/M0) (d x - 2)
      Y2    = x^((d-1)/(d-2)) 2F1(-1/(d-2), 3/2; 2 - 1/(d-2); x)
      Ybar2 = -(M0^2/sqrt(s)) (M/M0) sqrt(1-x) 2F1((d-1)/(d-2), -1/2; 3/2; 1-x)

    Ybar2 is the exponent-1/2 solution at M0. For d >= 4 it is proportional to
    Y2 - (Y2(M0)/Y1(M0)) Y1; for d = 3 Y2 coincides with Y1 and Ybar2 carries
    the logarithm at M = 0.
    """

    route = "hypergeometric"

    def __init__(self, d: int, M0: float):
        super().__init__(M0)
        if d < 3:
            raise UnsupportedDimensionError(f"hypergeometric pair needs d >= 3, got {d}")
        self.d = int(d)
        self.s = (d - 2) / 2.0
        self._y2 = (-1.0 / (d - 2), 1.5, 2.0 - 1.0 / (d - 2))
        self._u = ((d - 1) / (d - 2), -0.5, 1.5)
        self._scale = -self.M0**2 / math.sqrt(self.s)

    def x(self, M: float) -> float:
        return (M / self.M0) ** self.s

    def Y1(self, M: float) -> float:
        return (M / self.M0) * (self.d * self.x(M) - 2.0)

    def Y1_prime(self, M: float) -> float:
        return (self.d**2 * self.x(M) / 2.0 - 2.0) / self.M0

    def Y1_second(self, M: float) -> float:
        return self.d**2 * self.s * self.x(M) / (2.0 * self.M0 * M)

    def _H(self, x: float) -> Tuple[float, float]:
        a, b, c = self._y2
        if x >= 1.0:
            value = gamma_fn(c) * gamma_fn(c - a - b) / (gamma_fn(c - a) * gamma_fn(c - b))
            return float(value), math.inf
        return hyp2f1(a, b, c, x), a * b / c * hyp2f1(a + 1, b + 1, c + 1, x)

    def Y2(self, M: float) -> float:
        if self.d == 3:
            return self.Ybar2(M)
        x = self.x(M)
        e2 = (self.d - 1) / (self.d - 2)
        return x**e2 * self._H(x)[0]

    def Y2_prime(self, M: float) -> float:
        if self.d == 3:
            return self.Ybar2_prime(M)
        x = self.x(M)
        e2 = (self.d - 1) / (self.d - 2)
        H, dH = self._H(x)
        return self.s * x / M * (e2 * x ** (e2 - 1.0) * H + x**e2 * dH)

    def Ybar2_by_combination(self, M: float) -> float:
        """Y2 - (Y2(M0)/Y1(M0)) Y1, the textbook construction (d >= 4)."""
        if self.d == 3:
            raise UnsupportedDimensionError("d = 3 has Y2 = Y1 up to scale; use Ybar2")
        return self.Y2(M) - self.Y2(self.M0) / (self.d - 2.0) * self.Y1(M)

    def _K(self, y: float, derivative: bool = False) -> float:
        a, b, c = self._u
        if derivative:
            return a * b / c * hyp2f1(a + 1, b + 1, c + 1, y)
        return hyp2f1(a, b, c, y)

    def Ybar2(self, M: float) -> float:
        if M >= self.M0:
            return 0.0
        if M <= 0:
            return 0.0
        y = 1.0 - self.x(M)
        return self._scale * (M / self.M0) * math.sqrt(y) * self._K(y)

    def Ybar2_prime(self, M: float) -> float:
        if not 0 < M < self.M0:
            raise SingularInputError(f"Ybar2' is singular at M={M}")
        x = self.x(M)
        y = 1.0 - x
        K = self._K(y)
        dK = self._K(y, derivative=True)
        dU = math.sqrt(y) * K / self.M0 - self.s * x / self.M0 * (K / (2.0 * math.sqrt(y)) + math.sqrt(y) * dK)
        return self._scale * dU


class _HeunBranch:
    """Series near 0 and dense continuation up to z_top for one local Heun solution."""

    def __init__(self, params: HeunParams, z_top: float):
        self.params = params
        self.z_split = 0.5 * params.radius
        self.z_top = z_top
        seed = heun_local(params.at(self.z_split))
        self._path = HeunPath(params, seed, z_top)

    def __call__(self, z: float) -> HeunValue:
        z = min(max(z, 0.0), self.z_top)
        if z <= self.z_split:
            return heun_local(self.params.at(z))
        return self._path(z)


class HeunPair(FundamentalPair):
    """
    d = 4, k = -1, c = 1, F0 = 0, 0 < M0 < 1. With a = 1/M0^2, z = M/M0 and
    zeta = 1 - z:

      Y1    = M^2 Hl(a, (1+a)/2; 2, 0, 2, 1/2; z)
      Ybar2 = -M^2 sqrt(zeta) Hl(1-a, 3/4 - 3a/2; 5/2, 1/2, 3/2, 2; zeta)
    """

    route = "heun"

    def __init__(self, M0: float):
        super().__init__(M0)
        if not M0 < 1:
            raise RegimeError(f"Heun pair needs 0 < M0 < 1, got {M0}")
        a = 1.0 / M0**2
        self.a = a
        self.y1_params = HeunParams(a, (1.0 + a) / 2.0, 2.0, 0.0, 2.0, 0.5)
        self.y2_params = HeunParams(1.0 - a, 0.75 - 1.5 * a, 2.5, 0.5, 1.5, 2.0)
        self._w = _HeunBranch(self.y1_params, 1.0 - HEUN_TOP)
        self._v = _HeunBranch(self.y2_params, 1.0 - HEUN_TOP)

    def Y1(self, M: float) -> float:
        return M * M * self._w(M / self.M0).value

    def Y1_prime(self, M: float) -> float:
        w = self._w(M / self.M0)
        return 2.0 * M * w.value + M * M * w.derivative / self.M0

    def Ybar2(self, M: float) -> float:
        if M >= self.M0:
            return 0.0
        M_min = HEUN_TOP * self.M0
        if M < M_min:
            return M / M_min * self.Ybar2(M_min)
        zeta = 1.0 - M / self.M0
        return -M * M * math.sqrt(zeta) * self._v(zeta).value

    def Ybar2_prime(self, M: float) -> float:
        if not 0 < M < self.M0:
            raise SingularInputError(f"Ybar2' is singular at M={M}")
        zeta = 1.0 - M / self.M0
        v = self._v(zeta)
        rz = math.sqrt(zeta)
        return -2.0 * M * rz * v.value + M * M / self.M0 * (v.value / (2.0 * rz) + rz * v.derivative)


class FrobeniusPair(FundamentalPair):
    """
    Any shifted chart with F0 = 0 and F^2 > 0 on (0, M0). Ybar2 starts from the
    two-term Frobenius expansion sqrt(h) (a0 + a1 h), h = M0 - M, and is
    integrated down towards M = 0. Y1 is the analytic (exponent 0) solution at
    M0 with Y1(M0) = 1, except for d = 4 with c > 0 where it is the
    M^2 (1 + b1 M) solution at the origin, matching the Heun normalization.
    """

    route = "frobenius"

    def __init__(self, chart: MChart):
        super().__init__(chart.M0)
        if abs(chart.F0) > 0:
            raise RegimeError("Frobenius pair needs F0 = 0 data")
        beta = -chart.dF2(chart.M0)
        if not beta > 0:
            raise RegimeError("F^2 must decrease through zero at M0")
        grid = np.geomspace(ORIGIN_CUTOFF * chart.M0, chart.M0 * (1 - 1e-6), 400)
        if min(chart.F2(float(M)) for M in grid) <= 0:
            raise RegimeError("F^2 vanishes inside (0, M0); the M chart is not monotone there")
        self.chart = chart
        self.coeffs = YCoefficients(chart)
        M0, d = chart.M0, chart.d
        f2 = chart.k * (2.0 - d) / (2.0 * (d - 2)) * M0 ** (d / 2.0 - 2.0)  # (F^2)'' at M0
        sigma0 = -f2 / (4.0 * beta) - d / (2.0 * M0)
        tau0 = chart.Q1(M0) / (4.0 * beta * M0 * M0)
        self.a0 = -(M0**1.5)
        self.a1 = -(2.0 / 3.0) * self.a0 * (tau0 - sigma0 / 2.0)
        self.tau0 = tau0
        self.h0 = FROBENIUS_OFFSET * M0
        self.M_low = ORIGIN_CUTOFF * M0

        h = self.h0
        start = [
            math.sqrt(h) * (self.a0 + self.a1 * h),
            -(self.a0 / (2.0 * math.sqrt(h)) + 1.5 * self.a1 * math.sqrt(h)),
        ]
        self._ybar2 = run_solver(
            self.coeffs.rhs, (M0 - h, self.M_low), start, rtol=Y_RTOL, atol=Y_ATOL * M0**1.5,
            what="Ybar2 integration",
        ).sol

        if d == 4 and chart.c > 0:
            f0 = -chart.k * chart.c / 4.0
            b1 = self._b1 = -chart.C / (4.0 * f0)
            Ms = FROBENIUS_OFFSET * M0
            start = [Ms * Ms * (1.0 + b1 * Ms), 2.0 * Ms + 3.0 * b1 * Ms * Ms]
            span = (Ms, M0 * (1.0 - HEUN_TOP))
            self._y1_from_origin = True
        else:
            start = [1.0 - 2.0 * tau0 * h, 2.0 * tau0]
            span = (M0 - h, self.M_low)
            self._y1_from_origin = False
        self._y1 = run_solver(self.coeffs.rhs, span, start, rtol=Y_RTOL, atol=Y_ATOL, what="Y1 integration").sol
        self._y1_span = span

    def _y1_state(self, M: float) -> np.ndarray:
        lo, hi = sorted(self._y1_span)
        if self._y1_from_origin and M < lo:
            b1 = self._b1
            return np.array([M * M * (1.0 + b1 * M), 2.0 * M + 3.0 * b1 * M * M])
        if not self._y1_from_origin and M > hi:
            h = self.M0 - M
            return np.array([1.0 - 2.0 * self.tau0 * h, 2.0 * self.tau0])
        return self._y1(min(max(M, lo), hi))

    def Y1(self, M: float) -> float:
        return float(self._y1_state(M)[0])

    def Y1_prime(self, M: float) -> float:
        return float(self._y1_state(M)[1])

    def _ybar2_state(self, M: float) -> Tuple[float, float]:
        h = self.M0 - M
        if h <= 0:
            return 0.0, math.inf
        if h <= self.h0:
            rh = math.sqrt(h)
            return rh * (self.a0 + self.a1 * h), -(self.a0 / (2.0 * rh) + 1.5 * self.a1 * rh)
        if M < self.M_low:
            Y, _ = self._ybar2(self.M_low)
            return M / self.M_low * Y, Y / self.M_low
        Y, dY = self._ybar2(M)
        return float(Y), float(dY)

    def Ybar2(self, M: float) -> float:
        return self._ybar2_state(M)[0]

    def Ybar2_prime(self, M: float) -> float:
        return self._ybar2_state(M)[1]


def hypergeom_fundamental(d: int, M0: float) -> HypergeometricPair:
    return HypergeometricPair(d, M0)


def heun_fundamental(M0: float) -> HeunPair:
    return HeunPair(M0)


def frobenius_fundamental(chart: MChart) -> FrobeniusPair:
    return FrobeniusPair(chart)


QUOTED_EXPONENTS = ((3.0 + math.sqrt(2.0)) / 2.0, (3.0 - math.sqrt(2.0)) / 2.0)


def quoted_heun_pair(M0: float) -> Tuple[HeunParams, HeunParams]:
    """
    Heun parameter lists in the form usually quoted for d = 4, k = -1, c = 1,
    with prefactors sqrt(2 - M M0) M^e for e in QUOTED_EXPONENTS. They do not
    solve the Y equation; kept for special-function checks only.
    """
    r2 = math.sqrt(2.0)
    a = 2.0 / M0**2
    first = HeunParams(a, 1.0 + 3.0 * r2 / 4.0 + (2.0 + r2) / (2.0 * M0**2), r2 / 2.0, 2.0 + r2 / 2.0, 1.0 + r2, 0.5)
    second = HeunParams(a, 1.0 - 3.0 * r2 / 4.0 + (2.0 - r2) / (2.0 * M0**2), -r2 / 2.0, 2.0 - r2 / 2.0, 1.0 - r2, 0.5)
    return first, second


# ---------------------------------------------------------------- C2 and the criterion integral


@dataclass(frozen=True)
class CriterionConstant:
    value: float
    error: float = 0.0
    limit: float = math.nan  # lim 2 M F Ybar2' at M0
    estimates: Tuple[float, ...] = field(default=(), repr=False)


def _richardson(samples) -> Tuple[float, float, Tuple[float, ...]]:
    """Halving ladder with integer-power error terms; returns (best, error, diagonal)."""
    table = [[float(g)] for g in samples]
    for j in range(1, len(table)):
        for i in range(1, j + 1):
            prev, lower = table[j][i - 1], table[j - 1][i - 1]
            table[j].append(prev + (prev - lower) / (2.0**i - 1.0))
    diagonal = tuple(table[j][j] for j in range(len(table)))
    diffs = [abs(diagonal[j] - diagonal[j - 1]) for j in range(1, len(diagonal))]
    best = int(np.argmin(diffs)) + 1
    return diagonal[best], diffs[best - 1], diagonal


def limit_2MF_Ybar2_prime(chart: MChart, pair: FundamentalPair) -> Tuple[float, float, Tuple[float, ...]]:
    M0 = chart.M0
    samples = []
    for j in range(C2_LEVELS):
        M = M0 * (1.0 - C2_EPS0 * 2.0**-j)
        samples.append(2.0 * M * chart.F(M) * pair.Ybar2_prime(M))
    limit, err, diagonal = _richardson(samples)
    if not err <= C2_RTOL * abs(limit):
        raise LimitFailure(f"C2 extrapolation did not settle (spread {err:.3g} at limit {limit:.6g})", diagonal)
    if limit == 0.0:
        raise DegenerateCriterionError("lim 2 M F Ybar2' vanishes")
    return limit, err, diagonal


def compute_C2(chart: MChart, v0: float, pair: FundamentalPair) -> CriterionConstant:
    """C2 = k v0 / lim_{M -> M0} 2 M F Ybar2'(M); sign(C2) = sign(k v0)."""
    limit, err, diagonal = limit_2MF_Ybar2_prime(chart, pair)
    if v0 == 0:
        return CriterionConstant(0.0, 0.0, limit, diagonal)
    value = chart.k * v0 / limit
    return CriterionConstant(value, abs(value) * err / abs(limit), limit, diagonal)


def criterion_integral(chart: MChart, pair: FundamentalPair) -> Tuple[float, float]:
    """int_0^M0 Ybar2(xi)/(2 xi F(xi)) dxi with xi = s^2."""

    def integrand(s: float) -> float:
        xi = s * s
        F = chart.F(xi)
        if F == 0.0:
            return 0.0
        return pair.Ybar2(xi) / (s * F)

    top = math.sqrt(chart.M0) * (1.0 - 1e-12)
    value, error = quad(integrand, 0.0, top, epsabs=INTEGRAL_EPSABS, epsrel=1e-10, limit=400)
    return value, error


def _criterion_value(name: str, chart: MChart, pair: FundamentalPair, v0: float, /, **inputs) -> CriterionReport:
    C2 = compute_C2(chart, v0, pair)
    integral, int_err = criterion_integral(chart, pair)
    value = 1.0 + C2.value * integral
    error = abs(integral) * C2.error + abs(C2.value) * int_err
    report = criterion_report(name, value, error, **inputs)
    logger.debug("%s: C2=%g integral=%g value=%g", name, C2.value, integral, value)
    return replace(report, extra={"C2": C2.value, "integral": integral, "route": pair.route})


# ---------------------------------------------------------------- criteria


def criterion_d4_c0_zero_velocity(M0: float, v0: float) -> CriterionReport:
    """d = 4, k = 1, c = 0, F0 = u0 = 0: q(0) = 1 - 2 v0 / M0^2 in system variables."""
    if not M0 > 0:
        raise InvalidInputError(f"M0 must be > 0, got {M0}")
    return criterion_report("d4-c0", 1.0 - 2.0 * v0 / M0**2, M0=M0, v0=v0)


def criterion_c0_zero_velocity(p: Params, G0: float, v0: float) -> CriterionReport:
    """Repulsive, no background, F0 = u0 = 0. k > 0 is scaled to 1 through (k G0, k v0)."""
    p.require_analytic("criterion_c0_zero_velocity")
    ps, Gs, vs = shift_values(p, G0, v0)
    if ps.c0 != 0:
        raise RegimeError("criterion_c0_zero_velocity needs c = 0 after the equilibrium shift")
    if ps.k < 0:
        raise RegimeError("criterion_c0_zero_velocity needs k > 0")
    if ps.d < 3:
        raise UnsupportedDimensionError(f"criterion_c0_zero_velocity needs d >= 3, got {ps.d}")
    G1, v1 = ps.k * Gs, ps.k * vs
    if not G1 < 0:
        raise OutOfHalfPlaneError("criterion_c0_zero_velocity needs G0 < 0 (k G0 < c/d)")
    M0 = (-ps.d * G1) ** (2.0 / ps.d)
    if ps.d == 4:
        report = criterion_d4_c0_zero_velocity(M0, v1)
        return replace(report, inputs={"d": 4, "G0": G0, "v0": v0, "M0": M0})
    chart = m_chart(Params(ps.d, 1.0, 0.0), 0.0, G1)
    pair = hypergeom_fundamental(ps.d, M0)
    return _criterion_value("c0-zero-velocity", chart, pair, v1, d=ps.d, G0=G0, v0=v0, M0=M0)


def criterion_d4_attractive(M0: float, v0: float, route: str = "heun") -> CriterionReport:
    """d = 4, k = -1, c = 1, F0 = u0 = 0, 0 < M0 < 1."""
    if not 0 < M0 < 1:
        raise RegimeError(f"criterion_d4_attractive needs 0 < M0 < 1, got {M0}")
    chart = m_chart(Params(4, -1.0, 1.0), 0.0, (1.0 - M0**2) / 4.0)
    if route == "heun":
        pair: FundamentalPair = heun_fundamental(M0)
    elif route == "frobenius":
        pair = frobenius_fundamental(chart)
    else:
        raise InvalidInputError(f"unknown route {route!r} (heun or frobenius)")
    W = pair.wronskian(0.5 * M0)
    if abs(W) < WRONSKIAN_TOL:
        raise DegenerateCriterionError(f"fundamental pair dependent (Wronskian {W:.3g})")
    return _criterion_value("d4-attractive", chart, pair, v0, M0=M0, v0=v0, route=route)


def zero_velocity_criterion(p: Params, G0: float, v0: float) -> CriterionReport:
    """Best available M-chart criterion for F0 = u0 = 0 data."""
    p.require_analytic("zero_velocity_criterion")
    ps, Gs, vs = shift_values(p, G0, v0)
    if ps.c0 == 0 and ps.k > 0:
        return criterion_c0_zero_velocity(p, G0, v0)
    chart = m_chart(ps, 0.0, Gs)
    if ps.d == 4 and ps.k == -1 and ps.c0 == 1 and chart.M0 < 1:
        return criterion_d4_attractive(chart.M0, vs)
    if not -ps.k * Gs > 0:
        raise RegimeError("zero-velocity data must start with F increasing (k G0 < 0)")
    pair = frobenius_fundamental(chart)
    return _criterion_value("zero-velocity", chart, pair, vs, d=ps.d, k=ps.k, c=ps.c0, G0=G0, v0=v0)


def nonlocal_pressure_data(n0: RadialProfile, d: int, r0: float) -> Tuple[float, float]:
    """
    (M0, v0) at r0 for zero-velocity data whose field is generated by the
    density n0 (c = 0, k = 1). The system slope is G0 = -G_NL with
    G_NL(r) = r^-d int_0^r n0 s^(d-1) ds, so v0 = r0 G0'(r0) = d G_NL - n0.
    """
    G_nl = EnclosedFieldProfile(n0, d).value(r0)
    if not G_nl > 0:
        raise OutOfHalfPlaneError(f"enclosed density at r0={r0} must be positive")
    return (d * G_nl) ** (2.0 / d), d * G_nl - n0.value(r0)


def nonlocal_pressure_criterion(n0: RadialProfile, d: int, r0: float) -> CriterionReport:
    M0, v0 = nonlocal_pressure_data(n0, d, r0)
    G0 = -(M0 ** (d / 2.0)) / d
    report = criterion_c0_zero_velocity(Params(d, 1.0, 0.0), G0, v0)
    return replace(report, inputs={**report.inputs, "r0": r0})


# ---------------------------------------------------------------- q(M) for general data


@dataclass
class QCurve:
    """
    q along one characteristic as a function of M.

    time_branch rows (t, M, q) cover the part integrated in time (F below the
    switch level, including the upper turning point when F0 < 0); the M branch
    covers [M_end, M_start] with M decreasing.
    """

    chart: MChart
    M_start: float
    M_end: float
    zero: Optional[float]
    time_branch: np.ndarray = field(repr=False)
    _sol: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, M: float) -> float:
        if self._sol is None or not self.M_end <= M <= self.M_start:
            raise ValueError(f"M={M} outside the M branch [{self.M_end}, {self.M_start}]")
        return float(self._sol(M)[0])

    @property
    def M_plus(self) -> float:
        return self.chart.M_plus

    def branch(self, n: int = 400) -> np.ndarray:
        if self._sol is None:
            return np.empty((0, 2))
        Ms = np.geomspace(self.M_start, self.M_end, n)
        return np.column_stack([Ms, [self(float(M)) for M in Ms]])

    def samples(self, n: int = 400) -> np.ndarray:
        """Rows (M, q) in travel order."""
        head = self.time_branch[:, 1:] if self.time_branch.size else np.empty((0, 2))
        return np.vstack([head, self.branch(n)])

    @property
    def q_min(self) -> float:
        if self.zero is not None:
            return 0.0
        return float(np.min(self.samples()[:, 1]))

    def second_differences(self, n: int = 200, lower: float = 0.02) -> np.ndarray:
        if self._sol is None:
            return np.empty(0)
        lo = max(self.M_end, lower * self.M_start)
        Ms = np.linspace(lo, self.M_start, n)
        return np.diff([self(float(M)) for M in Ms], 2)

    def convex(self, n: int = 200) -> bool:
        d2 = self.second_differences(n)
        if d2.size == 0:
            return True
        tol = 1e-12 * max(1.0, float(np.max(np.abs(self.branch(n)[:, 1]))))
        return bool(np.all(d2 <= tol) or np.all(d2 >= -tol))


def _switch_level(chart: MChart) -> float:
    top = chart.M_plus
    Ms = np.geomspace(ORIGIN_CUTOFF * top, top, 400)
    F2 = np.array([chart.F2(float(M)) for M in Ms])
    if np.any(F2[:-1] <= 0):
        raise RegimeError("F^2 vanishes inside (0, M+); M is not monotone along the branch")
    return SWITCH_FRACTION * math.sqrt(float(np.max(F2)))


def q_of_M(chart: MChart, u0: float, v0: float, time_horizon: float = 1e3, floor: float = M_FLOOR) -> QCurve:
    """
    q(M) for data (F0, G0, u0, v0) in the chart's shifted variables. Time
    integration runs until F rises through the switch level; from there the
    (q, P, R) system is integrated in M down to floor * M0:

      dq/dM = -P/(2FM), dP/dM = -R/(2FM), dR/dM = ((2+d) F R + Q1 P)/(2FM).
    """
    p = chart.params
    d, k = chart.d, chart.k
    f_sw = _switch_level(chart)
    rows = np.empty((0, 3))
    if chart.F0 >= f_sw:
        M_s, q, P, R = chart.M0, 1.0, u0, -2.0 * chart.F0 * u0 - k * v0
    else:

        def switch(_t, y):
            return y[1] - f_sw

        switch.terminal = True
        switch.direction = 1

        def q_zero(_t, y):
            return y[3]

        q_zero.terminal = True
        q_zero.direction = -1

        y0 = [1.0, chart.F0, chart.G0, 1.0, u0, v0]
        sol = run_solver(coupled_rhs(p), (0.0, time_horizon), y0, rtol=Q_RTOL, atol=Q_ATOL,
                         events=[switch, q_zero], what="q(M) time phase")
        rows = np.column_stack([sol.t, [chart.M_of_G(G) for G in sol.y[2]], sol.y[3]])
        if sol.t_events[1].size:
            G_hit = float(sol.y_events[1][0][2])
            M_zero = chart.M_of_G(G_hit)
            logger.debug("q vanishes in the time phase at t=%g (M=%g)", sol.t_events[1][0], M_zero)
            return QCurve(chart, M_zero, M_zero, M_zero, rows, None)
        if not sol.t_events[0].size:
            raise IntegrationFailure(f"F did not reach {f_sw:g} before t={time_horizon:g}", float(sol.t[-1]), sol.y[:, -1])
        _r, F, G, q, P, p2 = sol.y_events[0][0]
        M_s = chart.M_of_G(float(G))
        R = -2.0 * F * P - k * p2
        logger.debug("switching to the M chart at t=%g, M=%g", sol.t_events[0][0], M_s)

    def rhs(M, y):
        F = chart.F(M)
        den = 2.0 * F * M
        return [-y[1] / den, -y[2] / den, ((2 + d) * F * y[2] + chart.Q1(M) * y[1]) / den]

    def q_event(_M, y):
        return y[0]

    q_event.terminal = True
    q_event.direction = -1

    M_floor = floor * chart.M0
    sol = run_solver(rhs, (M_s, M_floor), [q, P, R], rtol=Q_RTOL, atol=Q_ATOL, events=[q_event],
                     what="q(M) integration")
    zero = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    return QCurve(chart, M_s, float(sol.t[-1]), zero, rows, sol.sol)


def q_of_M_d4_general(M0: float, F0: float, u0: float, v0: float) -> Tuple[QCurve, CriterionReport]:
    """d = 4, k = 1, c = 0 with arbitrary (F0, u0, v0); positivity on (0, M+)."""
    chart = m_chart(Params(4, 1.0, 0.0), F0, -(M0**2) / 4.0)
    curve = q_of_M(chart, u0, v0)
    report = criterion_report("q-of-M", curve.q_min, M0=M0, F0=F0, u0=u0, v0=v0)
    if curve.zero is not None:
        report = replace(report, smooth=False, boundary=False)
    extra = {"M_plus": chart.M_plus, "M_zero": curve.zero, "convex": curve.convex()}
    return curve, replace(report, extra=extra)
