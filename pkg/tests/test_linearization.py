# python
"""
tests/test_linearization.py
Coupled (r, F, G, q, p1, p2) integration, q-zero detection and the
classification policy.
"""
import math

import numpy as np
import pytest

from epblowup.errors import RegimeError
from epblowup.linearization import (
    BLOW_UP,
    MECH_ESCAPE,
    MECH_Q_ZERO,
    MECH_SEPARATRIX,
    SMOOTH_CERTIFIED,
    SMOOTH_TO_HORIZON,
    HorizonPolicy,
    classify_many,
    classify_point,
    coupled_rhs,
    criterion_report,
    direct_uv,
    equilibrium_criterion,
    integrate_coupled,
    node_tail,
    node_target,
    third_order_residual,
)
from epblowup.model import FamilyProfile, InitialPoint, Params

F_STAR = math.sqrt(1.0 / 3.0)
NODE = Params(3, -1.0, 1.0)


def test_coupled_rhs_components() -> None:
    p = Params(3, 1.0, 1.0)
    dr, dF, dG, dq, dp1, dp2 = coupled_rhs(p)(0.0, [2.0, 0.5, 0.1, 1.0, 0.2, 0.3])
    assert dr == pytest.approx(1.0)
    assert dF == pytest.approx(-0.25 - 0.1)
    assert dG == pytest.approx(0.5 - 3 * 0.5 * 0.1)
    assert dq == pytest.approx(0.2)
    # -(2F) p1 - k p2
    assert dp1 == pytest.approx(-1.0 * 0.2 - 0.3)
    # (c - dG) p1 - d F p2
    assert dp2 == pytest.approx(0.7 * 0.2 - 1.5 * 0.3)


def test_horizon_must_be_positive() -> None:
    with pytest.raises(ValueError):
        integrate_coupled(NODE, InitialPoint(1.0, 0.0, 0.0), 0.0)


def test_horizon_policy() -> None:
    assert HorizonPolicy().horizon_for(Params(3, 1.0, 1.0)) == pytest.approx(100 * math.pi)
    assert HorizonPolicy(horizon=7.0).horizon_for(NODE) == 7.0
    rho = node_target(NODE)[2]
    assert HorizonPolicy().horizon_for(NODE) == pytest.approx(200.0 / rho)
    assert HorizonPolicy().horizon_for(Params(4, 1.0, 0.0)) == 200.0


def test_radon_relation_holds_along_trajectory() -> None:
    p = Params(3, 1.0, 1.0)
    ip = InitialPoint(1.0, 0.2, -0.1, 0.3, -0.4)
    traj = integrate_coupled(p, ip, 4.0)
    uv = direct_uv(p, ip, traj.t_end)
    for t in np.linspace(0.0, traj.t_end, 20):
        s = traj.state(t)
        if s[3] < 0.1:
            break
        u, v = uv.uv(t)
        assert s[4] / s[3] == pytest.approx(u, abs=1e-7)
        assert s[5] / s[3] == pytest.approx(v, abs=1e-7)


@pytest.mark.parametrize(
    "p",
    [
        Params(3, 1.0, 1.0),
        Params(3, -1.0, 1.0),
        Params(3, 1.0, 1.0, mu=0.3),
        Params(3, 1.0, FamilyProfile.make("gaussian", a=1.0, sigma=2.0)),
    ],
)
def test_third_order_residual(p) -> None:
    traj = integrate_coupled(p, InitialPoint(1.0, 0.1, -0.2, 0.2, 0.1), 2.0, 1e-12, 1e-14)
    assert third_order_residual(traj, p, n_samples=40).max_abs < 1e-6


def test_equilibrium_data_is_certified_smooth() -> None:
    verdict = classify_point(NODE, InitialPoint(1.0, F_STAR, 1.0 / 3.0, 0.0, 0.0))
    assert verdict.outcome == SMOOTH_CERTIFIED
    assert verdict.tail_bound == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("v0,blows", [(0.4, False), (0.6, True)])
def test_d4_zero_velocity_detector(v0, blows) -> None:
    # M0 = 1: the closed form 1 - 2 v0 / M0^2 changes sign at v0 = 0.5
    verdict = classify_point(Params(4, 1.0, 0.0), InitialPoint(1.0, 0.0, -0.25, 0.0, v0))
    assert verdict.blows_up is blows
    if blows:
        assert verdict.mechanism == MECH_Q_ZERO
        assert verdict.t_star > 0
    else:
        assert verdict.outcome == SMOOTH_TO_HORIZON
        assert verdict.q_min > 0


def test_d4_zero_velocity_q_settles_at_closed_form() -> None:
    # q decreases toward 1 - 2 v0 / M0^2 = 0.2 and never reaches zero
    verdict = classify_point(Params(4, 1.0, 0.0), InitialPoint(1.0, 0.0, -0.25, 0.0, 0.4))
    assert verdict.outcome == SMOOTH_TO_HORIZON
    assert verdict.q_min == pytest.approx(0.2, abs=1e-3)


def test_direct_uv_shares_the_characteristic() -> None:
    p = Params(3, 1.0, 1.0, m=0.1)
    ip = InitialPoint(1.0, 0.2, -0.1, 0.1, 0.05)
    traj = integrate_coupled(p, ip, 2.0)
    uv = direct_uv(p, ip, traj.t_end)
    for t in np.linspace(0.0, traj.t_end, 9):
        assert np.asarray(uv.sol(t))[:3] == pytest.approx(traj.state(t)[:3], rel=1e-7, abs=1e-9)


@pytest.mark.parametrize(
    "p,G0",
    [
        # c + d m / k stays positive
        (Params(3, -1.0, 1.0, m=0.1), 0.2),
        # the shifted background turns negative and the orientation flips
        (Params(3, 1.0, 1.0, m=-0.6), 0.5),
    ],
)
def test_node_regime_with_nonzero_m_is_certified(p, G0) -> None:
    verdict = classify_point(p, InitialPoint(1.0, 0.5, G0, 0.0, 0.0))
    assert verdict.outcome == SMOOTH_CERTIFIED
    assert verdict.q_min == pytest.approx(1.0)


def test_separatrix_certificate_labels_escape() -> None:
    verdict = classify_point(NODE, InitialPoint(1.0, -0.5, 0.0))
    assert verdict.outcome == BLOW_UP
    assert verdict.mechanism == MECH_SEPARATRIX
    plain = classify_point(NODE, InitialPoint(1.0, -0.5, 0.0), HorizonPolicy(use_separatrix=False))
    assert plain.mechanism in (MECH_ESCAPE, MECH_Q_ZERO)


def test_classify_many_keeps_order() -> None:
    pts = [InitialPoint(1.0, -0.5, 0.0), InitialPoint(1.0, F_STAR, 1.0 / 3.0)]
    out = classify_many(NODE, pts)
    assert [v.blows_up for v in out] == [True, False]


def test_equilibrium_criterion_value() -> None:
    rep = equilibrium_criterion(NODE, -1.0, 0.0)
    assert rep.value == pytest.approx(1.0 - math.sqrt(3.0) / 2.0)
    assert rep.smooth
    assert rep.extra["q_min"] == pytest.approx(rep.value, abs=1e-6)


def test_equilibrium_criterion_catches_interior_minimum() -> None:
    rep = equilibrium_criterion(NODE, -10.0, 40.0)
    assert rep.extra["q_limit"] > 0
    assert rep.extra["q_min"] < 0
    assert not rep.smooth
    verdict = classify_point(NODE, InitialPoint(1.0, F_STAR, 1.0 / 3.0, -10.0, 40.0))
    assert verdict.blows_up


def test_equilibrium_criterion_regime() -> None:
    with pytest.raises(RegimeError):
        equilibrium_criterion(Params(3, 1.0, 1.0), 0.0, 0.0)


def test_node_tail_vanishes_at_rest() -> None:
    drift, bound = node_tail(NODE, F_STAR, 0.0, 0.0)
    assert drift == 0.0
    assert bound == 0.0


def test_criterion_report_boundary() -> None:
    rep = criterion_report("x", 0.0)
    assert rep.boundary and not rep.smooth
    assert not criterion_report("x", -0.1)
    assert criterion_report("x", 0.1)
    assert criterion_report("x", 1e-4, error=1e-3).boundary
