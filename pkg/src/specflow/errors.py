"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config problems exit 2, violated
preconditions exit 3, and failed verification of a claimed property exits 1.
"""

from __future__ import annotations


class SpecflowError(Exception):
    """Base class for all package errors."""


class ConfigError(SpecflowError):
    """Malformed configuration (bad JSON shape, missing keys, bad literals)."""


class PreconditionError(SpecflowError):
    """An operation's documented precondition does not hold for the inputs."""


class VerificationError(SpecflowError):
    """A property that the implementation asserts failed to verify.

    Raised loudly rather than silently degrading: hitting this means either
    the inputs sit outside the theory's hypotheses or there is a bug.
    """


class PrecisionError(SpecflowError):
    """Interval refinement hit the precision cap before reaching a decision."""

    def __init__(self, message: str, bits_required: int | None = None):
        super().__init__(message)
        self.bits_required = bits_required


class DigitSupplyError(SpecflowError):
    """A continued-fraction digit stream was exhausted mid-computation."""


class InsufficientStructureError(SpecflowError):
    """An exact product/membership needs basis structure that was not declared."""
