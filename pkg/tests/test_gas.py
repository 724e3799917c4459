from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import bisect

from conic_shock.errors import CavitationError, DomainError, InputError
from conic_shock.gas import (
    Freestream,
    GasModel,
    density_from_speed,
    enthalpy,
    enthalpy_inverse,
    sound_speed,
    sound_speed_sq,
)


def test_sound_speed_air_unit_density(gas14):
    assert sound_speed(gas14, 1.0) == pytest.approx(math.sqrt(1.4), rel=1e-15)


def test_bernoulli_constant(fs50):
    assert fs50.C0 == pytest.approx(0.5 * 50.0**2 + 1.4 / 0.4, rel=1e-15)


def test_enthalpy_is_c2_over_gamma_minus_one(gas14):
    rho = np.array([0.3, 1.0, 7.5])
    np.testing.assert_allclose(enthalpy(gas14, rho), sound_speed_sq(gas14, rho) / 0.4, rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    gamma=st.floats(1.05, 2.95),
    A=st.floats(0.1, 10.0),
    rho=st.floats(1e-3, 1e3),
)
def test_enthalpy_inverse_round_trip(gamma, A, rho):
    gas = GasModel(A, gamma)
    back = enthalpy_inverse(gas, enthalpy(gas, rho))
    assert back == pytest.approx(rho, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(frac=st.floats(0.0, 0.999))
def test_density_from_speed_matches_bisection(frac):
    gas = GasModel(1.0, 1.4)
    fs = Freestream(gas, 50.0)
    q2 = frac * 2.0 * fs.C0
    target = fs.C0 - 0.5 * q2
    # independent oracle: bisection on h(rho) = target
    oracle = bisect(lambda r: 1.4 * r**0.4 / 0.4 - target, 1e-30, 1e12, xtol=1e-14, rtol=1e-14, maxiter=500)
    assert density_from_speed(gas, fs, q2) == pytest.approx(oracle, rel=1e-12)


def test_density_monotone_in_speed(gas14, fs50):
    q2 = np.linspace(0.0, 1.9 * fs50.C0, 50)
    rho = density_from_speed(gas14, fs50, q2)
    assert np.all(np.diff(rho) < 0)


def test_upstream_density_recovered(gas14, fs50):
    assert density_from_speed(gas14, fs50, 50.0**2) == pytest.approx(1.0, rel=1e-12)


def test_cavitation(gas14, fs50):
    with pytest.raises(CavitationError):
        density_from_speed(gas14, fs50, 2.0 * fs50.C0)


def test_negative_speed_squared(gas14, fs50):
    with pytest.raises(DomainError):
        density_from_speed(gas14, fs50, -1.0)


@pytest.mark.parametrize("gamma", [1.0, 3.0, 0.5])
def test_gamma_range(gamma):
    with pytest.raises(InputError):
        GasModel(1.0, gamma)


def test_subsonic_freestream_rejected(gas14):
    with pytest.raises(InputError):
        Freestream(gas14, 1.0)


def test_density_must_be_positive(gas14):
    with pytest.raises(DomainError):
        sound_speed(gas14, 0.0)


def test_mach_slope(fs50):
    c0 = fs50.c0
    assert fs50.mach_slope == pytest.approx(c0 / math.sqrt(50.0**2 - c0**2), rel=1e-15)
