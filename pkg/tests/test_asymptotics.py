from __future__ import annotations

import json

import numpy as np
import pytest

from conic_shock.asymptotics import (
    QUANTITIES,
    background_asymptotics,
    coefficient_asymptotics,
    denominator_printed,
    derivative_asymptotics,
    dominant_remainder,
    expected_exponent,
    fit_remainder_rate,
    g_bound_constant,
    relative_error,
    report_csv,
    rho_prime_constant,
    stated_exponent,
    synthetic_fit,
)
from conic_shock.background import shoot_attached_shock
from conic_shock.errors import InputError, SupersonicInZViolation
from conic_shock.gas import Freestream, GasModel


def test_uz_closed_form_value(gas14):
    fs = Freestream(gas14, 100.0)
    assert background_asymptotics(0.1, gas14, fs).u_z == pytest.approx(100.0 / 1.01, rel=1e-15)


def test_synthetic_slope_exact():
    w = np.geomspace(25, 400, 9)
    fit = synthetic_fit(w, 3.0 * w**-2.0, expected=-2.0)
    assert fit.exponent_fitted == pytest.approx(-2.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.passed


def test_synthetic_fit_rejects_wrong_rate():
    w = np.geomspace(25, 400, 9)
    assert not synthetic_fit(w, w**-1.0, expected=-2.0).passed


@pytest.mark.parametrize("gamma,exp_", [(1.4, -2.0), (2.0, -2.0), (2.5, -4.0 / 3.0)])
def test_expected_exponent(gamma, exp_):
    assert expected_exponent(gamma) == pytest.approx(exp_)


def test_stated_exponent_for_velocity_terms():
    # only the (b0 q0)^(-2/(gamma-1)) term is attached to s0, u_r, u_z
    assert stated_exponent("u_z", 1.4) == pytest.approx(-5.0)
    assert stated_exponent("rho", 1.4) == pytest.approx(-2.0)


@pytest.mark.parametrize("b0", [0.1, 0.2])
def test_denominator_printed_ratio_tends_to_gamma(b0, gas14):
    ratios = []
    for w in (50.0, 400.0, 3200.0):
        fs = Freestream(gas14, w / b0)
        bg = shoot_attached_shock(b0, gas14, fs)
        _, ode, _ = relative_error("denominator", bg)
        ratios.append(ode / denominator_printed(b0, gas14, fs))
    assert abs(ratios[-1] - 1.4) < abs(ratios[0] - 1.4)
    assert ratios[-1] == pytest.approx(1.4, rel=1e-4)


@pytest.mark.parametrize("name", ["rho", "uz2_minus_c2", "denominator", "q2_minus_c2"])
def test_rate_fit_two_inverse_squared(name, gas14):
    q0 = [250.0 * 2 ** (k / 2) for k in range(9)]
    fit = fit_remainder_rate(name, 0.1, gas14, q0, n_nodes=1200)
    assert fit.passed, fit.summary()


@pytest.mark.parametrize("name", ["s0", "u_r", "u_z"])
def test_velocity_rate_follows_stated_term(name, gas14):
    q0 = [250.0 * 2 ** (k / 2) for k in range(9)]
    fit = fit_remainder_rate(name, 0.1, gas14, q0, n_nodes=1200, expected=stated_exponent(name, 1.4))
    assert fit.passed, fit.summary()


def test_rate_fit_gamma_above_two():
    gas = GasModel(1.0, 2.5)
    q0 = [125.0 * 2 ** (k / 2) for k in range(9)]
    for name in ("s0", "rho", "denominator"):
        assert fit_remainder_rate(name, 0.2, gas, q0, n_nodes=1200).passed


def test_derivatives_against_ode(gas14):
    fs = Freestream(gas14, 4000.0)
    bg = shoot_attached_shock(0.1, gas14, fs)
    asym = derivative_asymptotics(0.1, gas14, fs)
    for key in ("ur_prime", "uz_prime", "lam1_minus_s", "lam2_minus_s"):
        err, _, _ = relative_error(key, bg)
        assert err < 1e-3, key
    assert asym["lam1_minus_s"] < 0 < asym["lam2_minus_s"]


def test_empirical_bound_constants_saturate(gas14):
    ks = []
    for w in (100.0, 400.0, 1600.0):
        bg = shoot_attached_shock(0.1, gas14, Freestream(gas14, w / 0.1))
        ks.append((g_bound_constant(bg), rho_prime_constant(bg)))
    (g1, r1), _, (g3, r3) = ks
    assert g3 == pytest.approx(g1, rel=0.01)
    assert r3 == pytest.approx(r1, rel=0.01)


def test_coefficient_leading_orders(gas14):
    c = coefficient_asymptotics(0.1, gas14, Freestream(gas14, 100.0))
    assert c["mu1"] == pytest.approx(4.95, rel=1e-12)
    assert c["mu2"] == pytest.approx(-100.0 / 2.02, rel=1e-12)
    assert c["P4"] == 0.0
    assert c["B1"] > 0


def test_b0_beyond_b_star(gas14):
    with pytest.raises(SupersonicInZViolation):
        background_asymptotics(1.4, gas14, Freestream(gas14, 100.0))


def test_sweep_validation(gas14):
    with pytest.raises(InputError):
        fit_remainder_rate("rho", 0.1, gas14, [100, 200, 400])
    with pytest.raises(InputError):
        fit_remainder_rate("nope", 0.1, gas14, [100, 200, 400, 2000])
    with pytest.raises(InputError):
        fit_remainder_rate("rho", 0.1, gas14, [100, 120, 140, 160])


def test_dominant_remainder_choice():
    assert dominant_remainder("rho", 0.1, 1000.0, 1.4) == pytest.approx(1e-4)
    assert dominant_remainder("rho", 0.1, 1000.0, 2.5) == pytest.approx(100.0 ** (-4 / 3))


def test_report_serialization(gas14):
    q0 = [250.0 * 2 ** (k / 2) for k in range(8)]
    fit = fit_remainder_rate("rho", 0.1, gas14, q0, n_nodes=800)
    assert json.loads(fit.to_json())["quantity"] == "rho"
    lines = report_csv([fit]).splitlines()
    assert lines[0] == "quantity,q0,b0q0,ode_value,asym_value,rel_error"
    assert len(lines) == 1 + len(q0)


def test_registry_complete():
    for key in ("s0", "u_r", "u_z", "rho", "uz2_minus_c2", "denominator", "P1", "B1", "mu2"):
        assert key in QUANTITIES
