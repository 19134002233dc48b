# python
"""
tests/test_model.py
Parameter validation, radial profiles, point derivation, density checks and
the equilibrium shift.
"""
import math

import pytest

from epblowup.errors import InvalidInputError, InvalidProfileError, RegimeError
from epblowup.model import (
    EnclosedFieldProfile,
    FamilyProfile,
    GridProfile,
    InitialPoint,
    Params,
    check_density_positivity,
    classify_equilibria,
    derive_point,
    divergence_density,
    profile_from_spec,
    radial_field_from_density,
    shift_values,
)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"d": 0, "k": 1.0},
        {"d": 3, "k": 0.0},
        {"d": 3, "k": 1.0, "c": -0.5},
        {"d": 3, "k": 1.0, "mu": -1.0},
        {"d": 3, "k": math.inf},
    ],
)
def test_params_rejects_invalid_values(kwargs) -> None:
    with pytest.raises(InvalidInputError):
        Params(**kwargs)


def test_params_discriminant_and_regime_flags() -> None:
    p = Params(3, -1.0, 1.0, m=0.5)
    assert p.discriminant == pytest.approx(0.5)
    assert p.analytic_regime
    assert not Params(3, 1.0, 1.0, mu=0.2).analytic_regime


def test_profile_background_is_not_analytic() -> None:
    p = Params(3, 1.0, FamilyProfile.make("gaussian", a=1.0, sigma=2.0))
    assert not p.constant_c
    with pytest.raises(RegimeError):
        p.c0
    assert p.c_at(0.0) == pytest.approx(1.0)


def test_initial_point_at_origin_needs_zero_slopes() -> None:
    with pytest.raises(InvalidInputError):
        InitialPoint(0.0, 0.1, 0.0, 0.5, 0.0)
    assert InitialPoint(0.0, 0.1, 0.0).u0 == 0.0


def test_initial_point_density_margin() -> None:
    ip = InitialPoint(1.0, 0.0, 0.1, 0.0, 0.2)
    # c - (v0 + d G0)
    assert ip.density_margin(Params(3, 1.0, 1.0)) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "family,params",
    [
        ("gaussian", {"a": 1.3, "sigma": 0.7}),
        ("rational", {"a": 0.5, "p": 1.5}),
        ("polygauss", {"a": 1.0, "b": -0.4, "sigma": 1.1}),
        ("power", {"a": 2.0, "n": 3}),
    ],
)
def test_family_derivatives_match_finite_differences(family, params) -> None:
    prof = FamilyProfile.make(family, **params)
    h = 1e-5
    for r in (0.3, 1.0, 2.2):
        fd1 = (prof.value(r + h) - prof.value(r - h)) / (2 * h)
        fd2 = (prof.derivative(r + h) - prof.derivative(r - h)) / (2 * h)
        assert prof.derivative(r) == pytest.approx(fd1, rel=1e-7, abs=1e-9)
        assert prof.derivative(r, 2) == pytest.approx(fd2, rel=1e-6, abs=1e-8)


def test_family_profile_validation() -> None:
    with pytest.raises(InvalidProfileError):
        FamilyProfile.make("gaussian", a=1.0)
    with pytest.raises(InvalidProfileError):
        FamilyProfile.make("gaussian", a=1.0, sigma=-1.0)
    with pytest.raises(InvalidProfileError):
        FamilyProfile.make("triangle", a=1.0)


def test_profile_from_spec_variants() -> None:
    assert profile_from_spec(0.25).value(3.0) == pytest.approx(0.25)
    g = profile_from_spec({"kind": "family", "family": "gaussian", "a": 2.0, "sigma": 1.0})
    assert g.value(0.0) == pytest.approx(2.0)
    grid = profile_from_spec({"kind": "grid", "r": [0.0, 1.0, 2.0, 3.0], "v": [0.0, 1.0, 4.0, 9.0]})
    assert isinstance(grid, GridProfile)
    assert grid.value(2.0) == pytest.approx(4.0)
    with pytest.raises(InvalidProfileError):
        profile_from_spec({"kind": "mystery"})


def test_derive_point_uses_radial_slopes() -> None:
    F0 = FamilyProfile.make("gaussian", a=1.0, sigma=1.0)
    G0 = FamilyProfile.make("constant", a=-0.2)
    ip = derive_point(F0, G0, 1.0)
    assert ip.F0 == pytest.approx(math.exp(-1.0))
    assert ip.u0 == pytest.approx(-2.0 * math.exp(-1.0))
    assert ip.v0 == 0.0
    at_origin = derive_point(F0, G0, 0.0)
    assert (at_origin.u0, at_origin.v0) == (0.0, 0.0)


def test_enclosed_field_of_constant_density() -> None:
    field = radial_field_from_density(FamilyProfile.make("constant", a=1.0), 3)
    for r in (0.0, 0.5, 4.0):
        assert field.value(r) == pytest.approx(1.0 / 3.0)
        assert field.derivative(r) == pytest.approx(0.0, abs=1e-12)


def test_enclosed_field_recovers_density() -> None:
    n0 = FamilyProfile.make("gaussian", a=2.0, sigma=1.0)
    field = EnclosedFieldProfile(n0, 4)
    assert field.value(0.0) == pytest.approx(2.0 / 4.0)
    for r in (0.5, 1.5):
        # r G' + d G = n
        assert r * field.derivative(r) + 4 * field.value(r) == pytest.approx(n0.value(r), rel=1e-9)


def test_negative_density_is_rejected() -> None:
    with pytest.raises(InvalidInputError):
        radial_field_from_density(FamilyProfile.make("constant", a=-1.0), 3)


def test_density_positivity_report() -> None:
    p = Params(3, 1.0, 1.0)
    G0 = FamilyProfile.make("constant", a=0.5)
    report = check_density_positivity(None, G0, p, [0.0, 1.0, 2.0])
    assert not report.ok
    assert report.first_violation == 0.0
    assert report.min_margin == pytest.approx(-0.5)

    at_edge = FamilyProfile.make("constant", a=1.0 / 3.0)
    assert check_density_positivity(None, at_edge, p, [0.0, 1.0]).ok
    assert not check_density_positivity(None, at_edge, p, [0.0, 1.0], strict=True).ok
    assert divergence_density(at_edge, p, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_shift_values_moves_equilibrium_to_origin() -> None:
    ps, G, v = shift_values(Params(3, 1.0, 1.0, m=0.5), 0.1, 0.3)
    assert (ps.d, ps.k, ps.c0, ps.m) == (3, 1.0, pytest.approx(2.5), 0.0)
    assert G == pytest.approx(0.6)
    assert v == pytest.approx(0.3)


def test_shift_values_flips_negative_background() -> None:
    ps, G, v = shift_values(Params(3, -1.0, 1.0, m=1.0), 0.1, 0.3)
    assert ps.k == 1.0
    assert ps.c0 == pytest.approx(2.0)
    assert G == pytest.approx(0.9)
    assert v == pytest.approx(-0.3)


def test_classify_equilibria_regimes() -> None:
    center = classify_equilibria(Params(3, 1.0, 1.0))
    assert center.regime == "center"
    assert [e.kind for e in center.entries] == ["center"]

    node = classify_equilibria(Params(3, -1.0, 1.0))
    assert node.regime == "node"
    stable = node.of_kind("stable-node")
    assert stable.F == pytest.approx(math.sqrt(1.0 / 3.0))
    assert stable.G == pytest.approx(1.0 / 3.0)
    assert node.of_kind("saddle").F == 0.0

    assert classify_equilibria(Params(3, 1.0, 0.0)).regime == "saddle-node"
