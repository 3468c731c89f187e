class WorkbenchError(Exception):
    """Base exception for every expected failure of the workbench.

    Attributes:
        message: Human-readable error message
        exit_code: Process exit code used by the command-line front end
    """

    exit_code = 2

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(message)


class InputError(WorkbenchError, ValueError):
    """Raised when an argument or document is malformed."""


class PreconditionError(InputError):
    """Raised when well-formed inputs do not satisfy an operation's hypotheses."""


class UnsupportedError(InputError):
    """Raised when valid inputs fall outside what the workbench handles, such as fewer than three users."""


class CapacityError(WorkbenchError):
    """Raised when a desk-scale cap (ambient dimension, enumeration size) is exceeded."""

    exit_code = 4


class InvariantViolationError(WorkbenchError):
    """Raised when an identity that must hold exactly is observed to fail.

    Attributes:
        message: Human-readable error message
        seed: Seed of the channel instance involved (if any)
    """

    exit_code = 3

    def __init__(self, message: str, seed: int | None = None) -> None:
        self.seed = seed
        if seed is not None:
            message = f"{message} (seed={seed})"
        super().__init__(message)


class DegenerateInstanceError(InvariantViolationError):
    """Raised when every resampled channel instance fails the genericity probe."""
