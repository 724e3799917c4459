from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conic_shock.asymptotics import log_fit
from conic_shock.background import shoot_attached_shock
from conic_shock.errors import InputError, InvalidWeightError
from conic_shock.gas import Freestream, GasModel
from conic_shock.stability import (
    coefficients_from_state,
    cone_cancellation,
    hardy_check,
    hardy_ratio,
    k_functions,
    leading_constants,
    linear_coefficients,
    multiplier_b,
    multiplier_eval,
    power_sample,
    shock_coefficients,
    trig_samples,
)


def test_perturbation_operator_expansion_is_exact():
    """Expanding the full potential equation about the background reproduces L - f exactly."""
    sp = pytest.importorskip("sympy")
    s, r, g, uz, ur, urp, c2 = sp.symbols("s r gamma u_z u_r urp c2", real=True)
    w, v, p, pzz, pzr, prr, ptt, pzt, prt = sp.symbols("w v p pzz pzr prr ptt pzt prt", real=True)
    z = r / s
    uzp = -s * urp
    Bzz, Bzr, Brr = -s * uzp / z, uzp / z, urp / z

    def E(Pz, Pr, Pt, Pzz, Pzr, Prr, Ptt, Pzt, Prt, C2):
        lap = Pzz + Prr + Pr / r + Ptt / r**2
        conv = (
            Pz**2 * Pzz + 2 * Pz * Pr * Pzr + Pr**2 * Prr + 2 * Pz * Pt * Pzt / r**2
            + 2 * Pr * Pt * Prt / r**2 - Pr * Pt**2 / r**3 + Pt**2 * Ptt / r**4
        )
        return C2 * lap - conv

    C2f = c2 - (g - 1) / 2 * (2 * uz * w + w**2 + 2 * ur * v + v**2 + p**2 / r**2)
    D = uz**2 - c2
    lhs = -(E(uz + w, ur + v, p, Bzz + pzz, Bzr + pzr, Brr + prr, ptt, pzt, prt, C2f)
            - E(uz, ur, 0, Bzz, Bzr, Brr, 0, 0, 0, c2)) / D
    P1, P2, P3 = uz * ur / D, (ur**2 - c2) / D, c2 / D
    P4 = (-(g + 1) / 2 * s**2 * uz * uzp + (g - 1) / 2 * s * uz * urp + s * ur * uzp + (g - 1) / 2 * uz * ur) / D
    P5 = (-(g - 1) / 2 * s**2 * ur * uzp + (g + 1) / 2 * s * ur * urp + s * uz * uzp + (g - 1) / 2 * ur**2 - c2 / 2) / D
    L = pzz + 2 * P1 * pzr + P2 * prr - P3 * ptt / r**2 + 2 * P4 * w / r + 2 * P5 * v / r
    K = (2 * uz + w) * w + (2 * ur + v) * v + p**2 / r**2
    f1 = (-2 * uz * w - w**2 - (g - 1) / 2 * K) / D
    f2 = (-2 * uz * v - 2 * ur * w - 2 * w * v) / D
    f3 = (-2 * ur * v - v**2 - (g - 1) / 2 * K) / D
    f4 = -(p**2 / r**2 + (g - 1) / 2 * K) / D
    f5 = -2 / D * (uz * p / r + w * p / r)
    f6 = -2 / D * (ur * p / r + v * p / r)
    f7 = (
        s**2 * uzp * ((g + 1) / 2 * w**2 + (g - 1) / 2 * v**2 + (g - 1) / 2 * p**2 / r**2)
        - s * urp * ((g - 1) / 2 * w**2 + (g + 1) / 2 * v**2 + (g - 1) / 2 * p**2 / r**2)
        - 2 * s * uzp * w * v
        - ur * ((g - 1) / 2 * w**2 + (g - 1) / 2 * v**2 + (g - 3) / 2 * p**2 / r**2)
        + v * (p**2 / r**2 - (g - 1) / 2 * K)
    ) / D
    rhs = f1 * pzz + f2 * pzr + f3 * prr + f4 * ptt / r**2 + f5 * pzt / r + f6 * prt / r + f7 / r
    assert sp.simplify(sp.expand((lhs - (L - rhs)) * D)) == 0


def test_closures_match_symbolic_forms(bg_ref):
    from conic_shock._fallback import closures_f

    lc = linear_coefficients(bg_ref)
    assert lc.P4.shape == bg_ref.s.shape
    assert np.all(np.isfinite(lc.P5))
    del closures_f


def test_dP1_against_finite_difference(gas14, fs50):
    bg = shoot_attached_shock(0.1, gas14, fs50, n_nodes=4000)
    lc = linear_coefficients(bg)
    n = bg.i_shock
    fd = np.gradient(lc.P1[: n + 1], bg.s[: n + 1], edge_order=2)
    scale = np.max(np.abs(lc.dP1[: n + 1]))
    assert np.max(np.abs(fd[2:-2] - lc.dP1[2 : n - 1])) < 1e-5 * scale


def test_hypersonic_coefficients(gas14):
    fs = Freestream(gas14, 1000.0)
    bg = shoot_attached_shock(0.1, gas14, fs)
    sh = shock_coefficients(bg)
    lc = linear_coefficients(bg)
    E = 1 - 0.2 * 0.01 * 1.01
    assert sh.mu1 == pytest.approx(4.95, rel=1e-3)
    assert sh.mu2 < 0
    assert lc.P1[0] == pytest.approx(0.1 / E, rel=1e-3)
    assert lc.P5[0] == pytest.approx(-0.1 * 0.01 * 1.01 / E, rel=1e-2)


def test_B1_slope(gas14):
    w = np.array([25.0, 50.0, 100.0, 200.0, 400.0])
    B1 = [shock_coefficients(shoot_attached_shock(0.1, gas14, Freestream(gas14, x / 0.1))).B1 for x in w]
    slope, _, r2 = log_fit(w, B1)
    assert min(B1) > 0
    assert slope == pytest.approx(2.4 / 0.4, rel=0.02)
    assert r2 > 0.999


def test_multiplier_b_matches_cone():
    b, db = multiplier_b(0.0, 0.2)
    assert b == pytest.approx(0.04, rel=1e-15)
    assert db == pytest.approx(0.4 + 0.04 / 0.2)


@pytest.mark.parametrize("b0", [0.05, 0.3])
def test_cone_cancellation_coefficientwise(b0):
    rng = np.random.default_rng(3)
    for _ in range(20):
        # any state with u_r = b0 u_z and u_z^2 > c^2
        uz = rng.uniform(1.0, 100.0)
        c2 = rng.uniform(0.01, 0.99) * uz * uz
        ur = b0 * uz
        D = uz * uz - c2
        P1, P2, P3 = uz * ur / D, (ur * ur - c2) / D, c2 / D
        res = cone_cancellation(b0, 1.0, b0 * b0, P1, P2, P3)
        assert abs(res["XX"]) <= 1e-12 and abs(res["WW"]) <= 1e-12


def test_cone_cancellation_needs_matching_b():
    res = cone_cancellation(0.1, 1.0, 0.02, 0.1, -0.01, 0.02)
    assert abs(res["XX"]) > 1e-6


def test_multiplier_reference_passes(bg_ref):
    rep = multiplier_eval(bg_ref)
    assert rep.verdict, rep.checks
    assert rep.cone_cancellation_residual <= 1e-12
    assert np.all(rep.lambda_min > 0)
    assert rep.identity_residual <= rep.identity_budget
    assert rep.b[0] == pytest.approx(bg_ref.b0**2, rel=1e-15)


def test_leading_constants_close(gas14):
    fs = Freestream(gas14, 4000.0)
    rep = multiplier_eval(shoot_attached_shock(0.1, gas14, fs))
    lead = leading_constants(0.1, 1.4)
    assert rep.C3 == pytest.approx(lead["C3"], rel=1e-2)
    assert rep.C6 == pytest.approx(lead["C6"], rel=1e-2)
    assert lead["C6"] * 1.01**2 == pytest.approx(4 * 0.01 * lead["C3"], rel=1e-12)
    assert lead["discriminant"] < 0


def test_discriminant_leading_order(gas14):
    fs = Freestream(gas14, 4000.0)
    rep = multiplier_eval(shoot_attached_shock(0.1, gas14, fs))
    lead = leading_constants(0.1, 1.4)["discriminant"]
    assert rep.discriminant[0] == pytest.approx(lead, rel=5e-2)


def test_k_functions_shapes(bg_ref):
    c = coefficients_from_state(1.4, 1.0, bg_ref.s, bg_ref.rho, bg_ref.u_r, bg_ref.u_z)
    b, db = multiplier_b(bg_ref.x, bg_ref.b0)
    K = k_functions(bg_ref.s, c, b, db, -1.5)
    assert all(k.shape == bg_ref.s.shape for k in K)


def test_report_serialization(bg_ref, tmp_path):
    rep = multiplier_eval(bg_ref)
    d = json.loads(rep.to_json(tmp_path / "m.json"))
    assert d["verdict"] is True
    assert rep.to_csv().splitlines()[0] == "s,K1,K2,K3,K4,discriminant,lambda_min"


@pytest.mark.parametrize("mu", [-1.0, -0.5, 0.0])
def test_invalid_weight(bg_ref, mu):
    with pytest.raises(InvalidWeightError):
        multiplier_eval(bg_ref, mu=mu)
    with pytest.raises(InvalidWeightError):
        hardy_check([power_sample(0.0)], mu=mu)


def test_hardy_constant_profile():
    T, mu = 100.0, -1.5
    assert hardy_ratio(power_sample(0.0), mu, T) == pytest.approx(1.0 - T**mu, rel=1e-10)


def test_hardy_critical_power():
    assert hardy_check([power_sample(0.75)], mu=-1.5) <= 1.0 + 1e-10


def test_hardy_random_trig():
    assert hardy_check(trig_samples(200, seed=7), mu=-1.5) <= 1.0 + 1e-10


def test_hardy_unit_boundary_weight_counterexample():
    # phi = z^(3/8) beats the unit boundary weight; the factor-two form holds
    assert hardy_ratio(power_sample(0.375), -1.5, 100.0) == pytest.approx(1.305, abs=2e-3)
    assert hardy_ratio(power_sample(0.375), -1.5, 100.0, boundary_factor=2.0) < 1.0


def test_hardy_factor_two_over_powers():
    powers = [power_sample(p) for p in np.linspace(-1.0, 1.5, 26)]
    assert hardy_check(powers, boundary_factor=2.0) <= 1.0 + 1e-10


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_hardy_nonfinite():
    with pytest.raises(InputError):
        hardy_check([(lambda z: math.nan, lambda z: 0.0)])


def test_multiplier_gamma_two(gas14):
    gas = GasModel(1.0, 2.0)
    rep = multiplier_eval(shoot_attached_shock(0.3, gas, Freestream(gas, 400.0 / 0.3)))
    assert rep.verdict and rep.Q0 > 0
