# python
"""
tests/test_characteristics.py
Characteristic integration, first integrals, separatrix and period tools.
"""
import math

import numpy as np
import pytest

from epblowup.characteristics import (
    CharacteristicState,
    blows_up_by_separatrix,
    characteristic_rhs,
    closed_orbit_criterion,
    conserved_mass,
    d1_bounded_c0,
    decay_rates,
    first_integral,
    first_integral_F2,
    integrate_characteristic,
    is_isochronous,
    linear_period,
    period_of_orbit,
    separatrix_curve,
    separatrix_F2,
    separatrix_threshold,
    tau,
)
from epblowup.errors import RegimeError, UnsupportedDimensionError
from epblowup.model import Params


def test_characteristic_rhs_components() -> None:
    p = Params(3, 1.0, 1.0, m=0.2, mu=0.1)
    dr, dF, dG = characteristic_rhs(p)(0.0, [2.0, 0.5, 0.1])
    assert dr == pytest.approx(1.0)
    # -F^2 - m - k G - mu F
    assert dF == pytest.approx(-0.25 - 0.2 - 0.1 - 0.05)
    # c F - d F G
    assert dG == pytest.approx(0.5 - 0.15)


def test_F_moves_off_the_G_axis() -> None:
    # F0 = 0 with G0 != 0 is not an equilibrium: F is driven by -k G
    p = Params(4, 1.0, 0.0)
    traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, 0.0, -0.25), 0.5)
    assert traj.final.F > 0.05


def test_equilibrium_stays_fixed() -> None:
    p = Params(3, 1.0, 1.0)
    traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, 0.0, 0.0), 10.0)
    end = traj.final
    assert not traj.escaped
    assert end.F == pytest.approx(0.0, abs=1e-14)
    assert end.G == pytest.approx(0.0, abs=1e-14)
    assert end.r == pytest.approx(1.0)


def test_tolerance_must_be_positive() -> None:
    with pytest.raises(ValueError):
        integrate_characteristic(Params(3, 1.0, 1.0), CharacteristicState(0.0, 1.0, 0.1, 0.0), 1.0, tol=0.0)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_first_integral_and_mass_are_conserved(d) -> None:
    p = Params(d, 1.0, 1.0)
    F0, G0 = 0.3, 0.1
    traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, F0, G0), 3.0 * linear_period(p))
    C0 = first_integral(p, F0, G0).value
    m0 = conserved_mass(p, 1.0, G0)
    for t in np.linspace(0.0, traj.t_end, 50):
        s = traj.state(t)
        assert first_integral(p, s.F, s.G).value == pytest.approx(C0, rel=1e-8)
        assert conserved_mass(p, s.r, s.G) == pytest.approx(m0, rel=1e-8)


def test_first_integral_forms() -> None:
    assert first_integral(Params(2, 1.0, 1.0), 0.1, 0.0).form == "d2-log"
    assert first_integral(Params(3, 1.0, 1.0), 0.1, 0.0).form == "general-d"


def test_first_integral_F2_inverts_the_constant() -> None:
    p = Params(3, 1.0, 1.0)
    C = first_integral(p, 0.4, -0.2).value
    assert first_integral_F2(p, C, -0.2) == pytest.approx(0.16)


def test_attractive_orbit_below_separatrix_escapes() -> None:
    p = Params(3, -1.0, 1.0)
    assert separatrix_F2(p, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert blows_up_by_separatrix(p, -0.1, 0.0)
    assert not blows_up_by_separatrix(p, 0.1, 0.0)
    traj = integrate_characteristic(p, CharacteristicState(0.0, 1.0, -0.5, 0.0), 50.0)
    assert traj.escaped
    assert traj.t_escape is not None and traj.t_escape < 50.0


def test_separatrix_threshold_sign_follows_G() -> None:
    p = Params(3, -1.0, 1.0)
    assert separatrix_threshold(p, -0.5) > 0
    assert separatrix_threshold(p, 0.2) < 0


def test_separatrix_curve_shape() -> None:
    curve = separatrix_curve(Params(3, -1.0, 1.0), n=25)
    assert curve.shape == (25, 3)
    assert np.allclose(curve[:, 1], -curve[:, 2])


def test_d2_separatrix_needs_log_form() -> None:
    with pytest.raises(UnsupportedDimensionError):
        separatrix_F2(Params(2, -1.0, 1.0), 0.0)
    assert separatrix_threshold(Params(2, -1.0, 1.0), -0.3) > 0


def test_closed_orbit_criterion_d1() -> None:
    p = Params(1, 1.0, 1.0)
    assert closed_orbit_criterion(p, 0.5, 0.3)
    assert not closed_orbit_criterion(p, 0.7, 0.3)
    assert closed_orbit_criterion(Params(3, 1.0, 1.0), 5.0, 0.2)
    with pytest.raises(RegimeError):
        closed_orbit_criterion(Params(3, -1.0, 1.0), 0.0, 0.0)


def test_d1_bounded_c0() -> None:
    assert d1_bounded_c0(0.3, 1.0)
    assert d1_bounded_c0(-0.3, -0.1)
    assert not d1_bounded_c0(-0.5, -0.1)


def test_linear_period_and_isochrony() -> None:
    assert linear_period(Params(3, 1.0, 1.0)) == pytest.approx(2 * math.pi)
    assert linear_period(Params(4, 1.0, 4.0)) == pytest.approx(math.pi)
    assert is_isochronous(Params(4, 1.0, 1.0))
    assert is_isochronous(Params(1, 1.0, 1.0))
    assert not is_isochronous(Params(3, 1.0, 1.0))
    with pytest.raises(RegimeError):
        linear_period(Params(3, -1.0, 1.0))


def test_tau_vanishes_only_for_isochronous_center() -> None:
    for y in (0.1, 0.5, 1.0):
        assert tau(Params(4, 1.0, 1.0), y) == pytest.approx(0.0, abs=1e-12)
    assert abs(tau(Params(3, 1.0, 1.0), 0.5)) > 1e-4


def test_period_of_orbit_d4_equals_linear_period() -> None:
    p = Params(4, 1.0, 1.0)
    for amp in (0.1, 0.5):
        assert period_of_orbit(p, amp, 0.0) == pytest.approx(2 * math.pi, rel=1e-7)


def test_period_of_orbit_d3_depends_on_amplitude() -> None:
    p = Params(3, 1.0, 1.0)
    small = period_of_orbit(p, 0.05, 0.0)
    large = period_of_orbit(p, 0.6, 0.0)
    assert abs(large - small) / (2 * math.pi) > 1e-3


def test_decay_rates_at_node() -> None:
    F_star = math.sqrt(1.0 / 3.0)
    rates = decay_rates(Params(3, -1.0, 1.0))
    assert rates == (pytest.approx(3 * F_star), pytest.approx(2 * F_star))
