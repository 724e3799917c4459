"""Polytropic gas, P = A rho**gamma, and the Bernoulli closure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CavitationError, DomainError, InputError


@dataclass(frozen=True)
class GasModel:
    A: float = 1.0
    gamma: float = 1.4

    def __post_init__(self) -> None:
        if not self.A > 0:
            raise InputError(f"A must be positive, got {self.A}")
        if not 1.0 < self.gamma < 3.0:
            raise InputError(f"gamma must lie in (1, 3), got {self.gamma}")

    def pressure(self, rho):
        return self.A * np.asarray(rho, dtype=float) ** self.gamma

    def to_dict(self) -> dict:
        return {"A": self.A, "gamma": self.gamma}


@dataclass(frozen=True)
class Freestream:
    """Uniform upstream state (0, 0, q0) with density rho0.

    ``c0`` and the Bernoulli constant ``C0`` are derived on construction.
    """

    gas: GasModel
    q0: float
    rho0: float = 1.0
    c0: float = field(init=False)
    C0: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.rho0 > 0:
            raise InputError(f"rho0 must be positive, got {self.rho0}")
        c0 = float(sound_speed(self.gas, self.rho0))
        if not self.q0 > c0:
            raise InputError(f"upstream flow must be supersonic: q0={self.q0} <= c0={c0}")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "C0", 0.5 * self.q0**2 + c0**2 / (self.gas.gamma - 1.0))

    @property
    def mach(self) -> float:
        return self.q0 / self.c0

    @property
    def mach_slope(self) -> float:
        """Slope r/z of the upstream Mach cone, c0/sqrt(q0^2 - c0^2)."""
        return self.c0 / math.sqrt(self.q0**2 - self.c0**2)

    def to_dict(self) -> dict:
        return {"q0": self.q0, "rho0": self.rho0, "c0": self.c0, "C0": self.C0}


def _check_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise DomainError("density must be positive")
    return rho


def sound_speed(gas: GasModel, rho):
    """c(rho) = sqrt(P'(rho)) = sqrt(A gamma rho**(gamma-1))."""
    rho = _check_density(rho)
    out = np.sqrt(gas.A * gas.gamma * rho ** (gas.gamma - 1.0))
    return float(out) if out.ndim == 0 else out


def sound_speed_sq(gas: GasModel, rho):
    rho = _check_density(rho)
    out = gas.A * gas.gamma * rho ** (gas.gamma - 1.0)
    return float(out) if out.ndim == 0 else out


def enthalpy(gas: GasModel, rho):
    """Specific enthalpy h(rho) = c^2(rho)/(gamma - 1)."""
    return sound_speed_sq(gas, rho) / (gas.gamma - 1.0)


def enthalpy_inverse(gas: GasModel, h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise DomainError("enthalpy must be positive")
    out = ((gas.gamma - 1.0) * h / (gas.A * gas.gamma)) ** (1.0 / (gas.gamma - 1.0))
    return float(out) if out.ndim == 0 else out


def density_from_speed(gas: GasModel, fs: Freestream, speed_sq):
    """Density H = h^{-1}(C0 - |u|^2/2) from Bernoulli's law.

    The polytropic enthalpy is a pure power of rho, so the inverse is taken in
    closed form; it is monotone and exact to rounding.

    Raises
    ------
    DomainError
        ``speed_sq`` negative.
    CavitationError
        ``speed_sq >= 2 C0`` (vacuum or beyond).
    """
    q2 = np.asarray(speed_sq, dtype=float)
    if np.any(q2 < 0):
        raise DomainError("squared speed must be nonnegative")
    if np.any(q2 >= 2.0 * fs.C0):
        raise CavitationError(f"squared speed reaches the vacuum limit 2*C0={2.0 * fs.C0}")
    return enthalpy_inverse(gas, fs.C0 - 0.5 * q2)
