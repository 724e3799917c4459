"""Attached conical shocks in steady hypersonic potential flow.

Modules: :mod:`.gas` (polytropic closure), :mod:`.background` (self-similar
flow and shock shooting), :mod:`.asymptotics` (hypersonic leading orders and
remainder-rate fits), :mod:`.stability` (linearized coefficients, multiplier
checks, Hardy inequality), :mod:`.perturb` (shock-fitted march of the
perturbed problem) and :mod:`.cli`.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .background import BackgroundSolution, critical_angle, shoot_attached_shock  # noqa: E402
from .gas import Freestream, GasModel, density_from_speed  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .perturb import MarchConfig, energy_diagnostics, run_march  # noqa: E402
from .stability import multiplier_eval  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "BackgroundSolution",
    "Freestream",
    "GasModel",
    "MarchConfig",
    "critical_angle",
    "density_from_speed",
    "energy_diagnostics",
    "multiplier_eval",
    "run_march",
    "shoot_attached_shock",
]
