"""Exception types shared across the package."""


class SalroiError(Exception):
    """Base class for errors raised by this package."""


class FormatError(SalroiError):
    """Malformed or truncated data: SMAP/EMB1/PPM streams, manifests, lexicons, config files."""


class StageError(SalroiError):
    """A pipeline stage failed. Carries the stage name and the original error."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}': {cause}")
