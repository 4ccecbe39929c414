from typing import Optional


class RibaucourError(Exception):
    """Base error; `exit_code` is what the CLI returns for it."""

    exit_code = 1


class ValidationError(RibaucourError):
    exit_code = 1


class ConstraintError(ValidationError):
    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class MaskedRegionError(ValidationError):
    """A stencil, patch or probe segment touches a masked point."""


class VerificationError(RibaucourError):
    exit_code = 2


class ExportError(RibaucourError):
    exit_code = 3
