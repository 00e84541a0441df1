"""Exception hierarchy.

Every error the CLI can surface maps to a distinct class (and exit code,
see cli.EXIT_CODES) so batch callers can dispatch on failures without
parsing message text.
"""


class OdmrScanscopeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(OdmrScanscopeError, ValueError):
    """Input outside an operation's mathematical domain (singular point,
    negative field magnitude, non-finite component, ...)."""


class SteadyStateError(DomainError):
    """The rate-equation system has no unique pumped steady state."""


class FitError(OdmrScanscopeError):
    """Lorentzian fitting failed in a way the caller must handle."""


class FitNonConvergenceError(FitError):
    """A fit required by a derived quantity did not converge.

    Carries the offending FitResult objects so the caller can inspect the
    best-so-far parameters.
    """

    def __init__(self, message, fits=()):
        super().__init__(message)
        self.fits = tuple(fits)


class ScanError(OdmrScanscopeError):
    """Raster scan could not produce a usable image."""


class SceneError(OdmrScanscopeError):
    """Base class for scene-file problems."""


class SceneSyntaxError(SceneError):
    """Scene file is not valid JSON."""


class SceneUnknownKeyError(SceneError):
    """Scene file contains a key the schema does not define."""

    def __init__(self, path, message=None):
        self.path = path
        super().__init__(message or f"unknown key: {path}")


class SceneInvariantError(SceneError):
    """Scene file violates a documented invariant."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
