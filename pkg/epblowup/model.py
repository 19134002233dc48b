# python
"""
epblowup/model.py
Domain types (parameters, radial profiles, initial points, equilibria) and the
data-ingestion helpers: density -> field, equilibrium shift, density positivity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import (
    InvalidInputError,
    InvalidProfileError,
    RegimeError,
    UnsupportedDimensionError,
)

logger = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-12
QUAD_EPSABS = 1e-12
DISCRIMINANT_TOL = 1e-12

PROFILE_FAMILIES = ("constant", "gaussian", "rational", "polygauss", "power")


def _finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidProfileError(f"non-finite {what}: {value}")
    return value


class RadialProfile:
    """
    A C^2 scalar function of the radius r >= 0 with derivative access.

    Subclasses implement `_eval(r, order)` for order 0, 1, 2. `bound` is the
    declared supremum of |value| on [0, inf).
    """

    kind = "abstract"
    bound: float = math.inf

    def _eval(self, r: float, order: int) -> float:
        raise NotImplementedError

    def value(self, r: float) -> float:
        return self.derivative(r, 0)

    def derivative(self, r: float, order: int = 1) -> float:
        if r < 0:
            raise InvalidInputError(f"radius must be >= 0, got {r}")
        if order not in (0, 1, 2):
            raise ValueError(f"unsupported derivative order: {order}")
        return _finite(self._eval(float(r), order), f"profile derivative (order {order}) at r={r}")

    def __call__(self, r: float) -> float:
        return self.value(r)

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class FamilyProfile(RadialProfile):
    """Builtin analytic families; derivatives are exact."""

    family: str
    params: Tuple[Tuple[str, float], ...] = ()
    kind = "family"

    def __post_init__(self) -> None:
        if self.family not in PROFILE_FAMILIES:
            raise InvalidProfileError(f"unknown profile family: {self.family}")
        p = self.p
        required = {
            "constant": ("a",),
            "gaussian": ("a", "sigma"),
            "rational": ("a", "p"),
            "polygauss": ("a", "b", "sigma"),
            "power": ("a", "n"),
        }[self.family]
        missing = [k for k in required if k not in p]
        if missing:
            raise InvalidProfileError(f"{self.family} profile missing parameters: {missing}")
        for k, v in p.items():
            _finite(v, f"{self.family} parameter {k}")
        if "sigma" in p and p["sigma"] <= 0:
            raise InvalidProfileError("sigma must be > 0")
        if self.family == "rational" and p["p"] <= 0:
            raise InvalidProfileError("rational decay exponent p must be > 0")
        if self.family == "power" and (p["n"] < 0 or p["n"] != int(p["n"])):
            raise InvalidProfileError("power exponent n must be a nonnegative integer")

    @classmethod
    def make(cls, family: str, **params: float) -> "FamilyProfile":
        return cls(family, tuple(sorted((k, float(v)) for k, v in params.items())))

    @property
    def p(self) -> Dict[str, float]:
        return dict(self.params)

    @property
    def bound(self) -> float:  # type: ignore[override]
        p = self.p
        if self.family == "power":
            return abs(p["a"]) if p["n"] == 0 else math.inf
        if self.family == "polygauss":
            return abs(p["a"]) + abs(p["b"]) * p["sigma"] ** 2 / math.e
        return abs(p["a"])

    def _eval(self, r: float, order: int) -> float:
        p = self.p
        a = p["a"]
        if self.family == "constant":
            return a if order == 0 else 0.0
        if self.family == "gaussian":
            s2 = p["sigma"] ** 2
            e = a * math.exp(-r * r / s2)
            return (e, -2.0 * r / s2 * e, (4.0 * r * r / s2**2 - 2.0 / s2) * e)[order]
        if self.family == "rational":
            n = p["p"]
            w = 1.0 + r * r
            if order == 0:
                return a * w**-n
            if order == 1:
                return -2.0 * n * r * a * w ** (-n - 1)
            return a * (-2.0 * n * w ** (-n - 1) + 4.0 * n * (n + 1) * r * r * w ** (-n - 2))
        if self.family == "polygauss":
            s2 = p["sigma"] ** 2
            e = math.exp(-r * r / s2)
            poly = (a + p["b"] * r * r, 2.0 * p["b"] * r, 2.0 * p["b"])
            ex = (e, -2.0 * r / s2 * e, (4.0 * r * r / s2**2 - 2.0 / s2) * e)
            if order == 0:
                return poly[0] * ex[0]
            if order == 1:
                return poly[1] * ex[0] + poly[0] * ex[1]
            return poly[2] * ex[0] + 2.0 * poly[1] * ex[1] + poly[0] * ex[2]
        # power
        n = int(p["n"])
        if order > n:
            return 0.0
        coeff = a * math.perm(n, order)
        return coeff * r ** (n - order)

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "family", "family": self.family, **self.p}


class GridProfile(RadialProfile):
    """
    Sampled radial profile interpolated by a clamped cubic spline.

    Knots must start at r = 0 and increase strictly. Beyond the last knot the
    profile continues with the constant last value.
    """

    kind = "grid"

    def __init__(self, r: Sequence[float], v: Sequence[float]):
        r_arr = np.asarray(r, dtype=float)
        v_arr = np.asarray(v, dtype=float)
        if r_arr.ndim != 1 or r_arr.shape != v_arr.shape or r_arr.size < 2:
            raise InvalidProfileError("grid profile needs matching r/v arrays with at least 2 knots")
        if not (np.all(np.isfinite(r_arr)) and np.all(np.isfinite(v_arr))):
            raise InvalidProfileError("grid profile contains non-finite samples")
        if r_arr[0] != 0.0:
            raise InvalidProfileError("grid profile must start at r = 0")
        if np.any(np.diff(r_arr) <= 0):
            raise InvalidProfileError("grid radii must be strictly increasing")
        self.r = r_arr
        self.v = v_arr
        # zero slope at the origin keeps the radial field even; zero slope at the
        # end matches the constant continuation
        self._spline = CubicSpline(r_arr, v_arr, bc_type="clamped")
        fine = np.linspace(0.0, r_arr[-1], 20 * r_arr.size)
        self._bound = float(max(np.max(np.abs(self._spline(fine))), np.max(np.abs(v_arr))))

    @property
    def bound(self) -> float:  # type: ignore[override]
        return self._bound

    def _eval(self, r: float, order: int) -> float:
        if r >= self.r[-1]:
            return float(self.v[-1]) if order == 0 else 0.0
        return float(self._spline(r, order))

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "grid", "r": self.r.tolist(), "v": self.v.tolist()}


class EnclosedFieldProfile(RadialProfile):
    """
    Field slope G0(r) = r^-d * int_0^r n0(s) s^(d-1) ds generated by a density n0.

    Evaluated as int_0^1 n0(r t) t^(d-1) dt so r = 0 needs no special case;
    the k-th derivative is int_0^1 n0^(k)(r t) t^(d-1+k) dt.
    """

    kind = "enclosed"

    def __init__(self, density: RadialProfile, d: int):
        self.density = density
        self.d = int(d)

    @property
    def bound(self) -> float:  # type: ignore[override]
        return self.density.bound / self.d

    def _eval(self, r: float, order: int) -> float:
        power = self.d - 1 + order

        def integrand(t: float) -> float:
            return self.density.derivative(r * t, order) * t**power

        val, _err = quad(integrand, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
        return val

    def to_spec(self) -> Dict[str, Any]:
        return {"kind": "enclosed", "d": self.d, "density": self.density.to_spec()}


class AffineProfile(RadialProfile):
    """scale * base(r) + offset; produced by the equilibrium shift."""

    kind = "affine"

    def __init__(self, base: RadialProfile, scale: float = 1.0, offset: float = 0.0, flipped: bool = False):
        self.base = base
        self.scale = float(scale)
        self.offset = float(offset)
        self.flipped = flipped

    @property
    def bound(self) -> float:  # type: ignore[override]
        return abs(self.scale) * self.base.bound + abs(self.offset)

    def _eval(self, r: float, order: int) -> float:
        val = self.scale * self.base.derivative(r, order)
        return val + self.offset if order == 0 else val

    def to_spec(self) -> Dict[str, Any]:
        return {
            "kind": "affine",
            "scale": self.scale,
            "offset": self.offset,
            "flipped": self.flipped,
            "base": self.base.to_spec(),
        }


def profile_from_spec(spec: Union[Dict[str, Any], float, int, RadialProfile]) -> RadialProfile:
    """
    Build a profile from its config specification:
      {"kind": "family", "family": "gaussian", "a": .., "sigma": ..}
      {"kind": "grid", "r": [...], "v": [...]}
    A bare number is read as a constant profile.
    """
    if isinstance(spec, RadialProfile):
        return spec
    if isinstance(spec, (int, float)):
        return FamilyProfile.make("constant", a=float(spec))
    kind = spec.get("kind")
    if kind == "family":
        params = {k: v for k, v in spec.items() if k not in ("kind", "family")}
        return FamilyProfile.make(spec.get("family", ""), **params)
    if kind == "grid":
        return GridProfile(spec.get("r", []), spec.get("v", []))
    raise InvalidProfileError(f"unknown profile kind: {kind}")


@dataclass(frozen=True)
class Params:
    d: int
    k: float
    c: Union[float, RadialProfile] = 0.0
    m: float = 0.0
    mu: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool) or self.d < 1:
            raise InvalidInputError(f"dimension d must be an integer >= 1, got {self.d!r}")
        if not math.isfinite(self.k) or self.k == 0:
            raise InvalidInputError("force constant k must be finite and nonzero")
        if not math.isfinite(self.m):
            raise InvalidInputError("confinement m must be finite")
        if not math.isfinite(self.mu) or self.mu < 0:
            raise InvalidInputError("friction mu must be >= 0")
        if isinstance(self.c, RadialProfile):
            samples = np.linspace(0.0, 10.0, 101)
            if min(self.c.value(r) for r in samples) < -POSITIVITY_TOL:
                raise InvalidInputError("background profile c(r) must be >= 0")
        elif not math.isfinite(self.c) or self.c < 0:
            raise InvalidInputError(f"background c must be >= 0, got {self.c}")

    @property
    def constant_c(self) -> bool:
        return not isinstance(self.c, RadialProfile)

    @property
    def analytic_regime(self) -> bool:
        return self.mu == 0 and self.constant_c

    @property
    def c0(self) -> float:
        """The constant background; RegimeError for a profile."""
        if not self.constant_c:
            raise RegimeError("operation needs a constant background c")
        return float(self.c)  # type: ignore[arg-type]

    def c_at(self, r: float) -> float:
        if self.constant_c:
            return float(self.c)  # type: ignore[arg-type]
        return self.c.value(max(r, 0.0))  # type: ignore[union-attr]

    def c_prime_at(self, r: float) -> float:
        if self.constant_c:
            return 0.0
        return self.c.derivative(max(r, 0.0), 1)  # type: ignore[union-attr]

    @property
    def discriminant(self) -> float:
        """m*d + c*k; sign selects center / saddle-node / node regime."""
        return self.m * self.d + self.c0 * self.k

    def require_analytic(self, what: str) -> None:
        if not self.analytic_regime:
            raise RegimeError(f"{what} requires mu = 0 and a constant background c")

    def to_record(self) -> Dict[str, Any]:
        c = self.c.to_spec() if isinstance(self.c, RadialProfile) else float(self.c)
        return {"d": int(self.d), "k": self.k, "c": c, "m": self.m, "mu": self.mu}


@dataclass(frozen=True)
class InitialPoint:
    r0: float
    F0: float
    G0: float
    u0: float = 0.0
    v0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("r0", "F0", "G0", "u0", "v0"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"initial point {name} must be finite")
        if self.r0 < 0:
            raise InvalidInputError(f"r0 must be >= 0, got {self.r0}")
        if self.r0 == 0 and (self.u0 != 0 or self.v0 != 0):
            raise InvalidInputError("u0 and v0 must vanish at r0 = 0")

    def density_margin(self, p: Params) -> float:
        """c(r0) - (v0 + d*G0); negative means negative initial density."""
        return p.c_at(self.r0) - (self.v0 + p.d * self.G0)

    def to_record(self) -> Dict[str, float]:
        return {"r0": self.r0, "F0": self.F0, "G0": self.G0, "u0": self.u0, "v0": self.v0}


@dataclass(frozen=True)
class Equilibrium:
    F: float
    G: float
    kind: str


@dataclass(frozen=True)
class EquilibriaReport:
    discriminant: float
    entries: Tuple[Equilibrium, ...]

    @property
    def regime(self) -> str:
        if self.discriminant > DISCRIMINANT_TOL:
            return "center"
        if self.discriminant < -DISCRIMINANT_TOL:
            return "node"
        return "saddle-node"

    def of_kind(self, kind: str) -> Optional[Equilibrium]:
        for e in self.entries:
            if e.kind == kind:
                return e
        return None


@dataclass(frozen=True)
class DensityReport:
    ok: bool
    strict: bool
    first_violation: Optional[float]
    min_margin: float
    checked: int = 0
    margins: List[float] = field(default_factory=list, repr=False)


def derive_point(F0_profile: RadialProfile, G0_profile: RadialProfile, r0: float) -> InitialPoint:
    r0 = float(r0)
    if r0 < 0:
        raise InvalidInputError(f"r0 must be >= 0, got {r0}")
    F0 = F0_profile.value(r0)
    G0 = G0_profile.value(r0)
    if r0 == 0.0:
        return InitialPoint(0.0, F0, G0, 0.0, 0.0)
    u0 = r0 * F0_profile.derivative(r0, 1)
    v0 = r0 * G0_profile.derivative(r0, 1)
    return InitialPoint(r0, F0, G0, u0, v0)


def radial_field_from_density(n0: RadialProfile, d: int, check_radii: Optional[Sequence[float]] = None) -> RadialProfile:
    if d < 2:
        raise UnsupportedDimensionError(f"density ingestion needs d >= 2, got {d}")
    radii = check_radii
    if radii is None:
        radii = n0.r if isinstance(n0, GridProfile) else np.linspace(0.0, 20.0, 401)
    for r in radii:
        if n0.value(float(r)) < -POSITIVITY_TOL:
            raise InvalidInputError(f"negative density sample n0({float(r)}) = {n0.value(float(r))}")
    return EnclosedFieldProfile(n0, d)


def divergence_density(G0: RadialProfile, p: Params, r: float) -> float:
    """n(r) = c(r) - (r*G0'(r) + d*G0(r)) recovered from the field slope."""
    lam = p.d * G0.value(r)
    if r > 0:
        lam += r * G0.derivative(r, 1)
    return p.c_at(r) - lam


def check_density_positivity(
    F0: Optional[RadialProfile],
    G0: RadialProfile,
    p: Params,
    r_grid: Sequence[float],
    strict: bool = False,
) -> DensityReport:
    """
    Check r*G0' + d*G0 <= c(r) on r_grid. The non-strict check allows equality
    within POSITIVITY_TOL; the strict check needs a positive margin.
    """
    margins = [divergence_density(G0, p, float(r)) for r in r_grid]
    first = None
    for r, margin in zip(r_grid, margins):
        bad = margin <= POSITIVITY_TOL if strict else margin < -POSITIVITY_TOL
        if bad:
            first = float(r)
            break
    min_margin = float(min(margins)) if margins else math.inf
    if first is not None:
        logger.info("density positivity violated at r=%g (min margin %g)", first, min_margin)
    return DensityReport(first is None, strict, first, min_margin, len(margins), margins)


def shift_to_zero_equilibrium(p: Params, G0: RadialProfile) -> Tuple[Params, RadialProfile]:
    """
    Move the distinguished equilibrium to the origin: G1 = G0 + m/k,
    c1 = c + d*m/k, m1 = 0. A negative c1 is made positive by flipping the
    signs of G1, k and c1; the returned profile records the flip.
    """
    p.require_analytic("shift_to_zero_equilibrium")
    if p.m == 0:
        return p, G0
    offset = p.m / p.k
    c1 = p.c0 + p.d * offset
    if c1 < 0:
        logger.debug("shifted background %g < 0, flipping field orientation", c1)
        return Params(p.d, -p.k, -c1, 0.0, p.mu), AffineProfile(G0, -1.0, -offset, flipped=True)
    return Params(p.d, p.k, c1, 0.0, p.mu), AffineProfile(G0, 1.0, offset)


def shift_values(p: Params, G0: float, v0: float) -> Tuple[Params, float, float]:
    """Pointwise form of shift_to_zero_equilibrium for scalar (G0, v0) data."""
    p.require_analytic("shift_values")
    if p.m == 0:
        return p, G0, v0
    offset = p.m / p.k
    c1 = p.c0 + p.d * offset
    if c1 < 0:
        return Params(p.d, -p.k, -c1, 0.0, p.mu), -(G0 + offset), -v0
    return Params(p.d, p.k, c1, 0.0, p.mu), G0 + offset, v0


def classify_equilibria(p: Params) -> EquilibriaReport:
    p.require_analytic("classify_equilibria")
    disc = p.discriminant
    G_s = -p.m / p.k
    if disc > DISCRIMINANT_TOL:
        entries = (Equilibrium(0.0, G_s, "center"),)
    elif disc >= -DISCRIMINANT_TOL:
        entries = (Equilibrium(0.0, G_s, "saddle-node"),)
    else:
        F_star = math.sqrt(-p.m - p.k * p.c0 / p.d)
        G_star = p.c0 / p.d
        entries = (
            Equilibrium(0.0, G_s, "saddle"),
            Equilibrium(F_star, G_star, "stable-node"),
            Equilibrium(-F_star, G_star, "unstable-node"),
        )
    return EquilibriaReport(disc, entries)
