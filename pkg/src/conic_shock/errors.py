"""Exception hierarchy.

Every error raised by the package derives from :class:`ConicShockError`, which
is itself a :class:`ValueError` so that callers validating user input can catch
the builtin.
"""

from __future__ import annotations


class ConicShockError(ValueError):
    pass


class DomainError(ConicShockError):
    """Argument outside the domain of a thermodynamic or geometric map."""


class CavitationError(DomainError):
    """Speed at or beyond the vacuum limit sqrt(2 C0)."""


class SonicDegeneracyError(ConicShockError):
    """Denominator of the conical ODE system vanished."""


class StiffnessError(ConicShockError):
    """Adaptive step control underflowed."""


class NoCompressiveRootError(ConicShockError):
    """Shock slope too weak for a compressive density jump."""


class ShockDetachedError(ConicShockError):
    """No attached conical shock exists for the requested cone."""


class BranchSelectionError(ConicShockError):
    """Root found but the Lax entropy conditions fail."""


class StrongBranchRejectedError(ConicShockError):
    """Post-shock flow is subsonic in the axial direction."""


class SupersonicInZViolation(DomainError):
    """Cone slope at or beyond the supersonic-in-z threshold b_*."""


class DegeneracyError(ConicShockError):
    """u_z^2 - c^2 <= 0 somewhere on the background table."""


class DivisionSafetyError(ConicShockError):
    pass


class InvalidWeightError(ConicShockError):
    """Weight exponent mu must satisfy mu < -1."""


class InputError(ConicShockError):
    pass


class BlowupError(ConicShockError):
    def __init__(self, message: str, z: float | None = None):
        super().__init__(message)
        self.z = z


class ExtensionExceededError(ConicShockError):
    """Shock left the extended background table."""


class EntropyError(ConicShockError):
    pass


class CFLViolation(ConicShockError):
    pass


class SweepError(ConicShockError):
    def __init__(self, message: str, q0: float):
        super().__init__(message)
        self.q0 = q0
