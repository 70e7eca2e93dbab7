"""Exception hierarchy shared by all submodules."""


class StokesBlockError(Exception):
    """Base class for errors raised by stokesblock."""


class ValidationError(StokesBlockError, ValueError):
    """Raised when an argument violates a documented precondition."""


class EigensolverError(StokesBlockError):
    '''Raised when the symmetric eigensolver fails to converge.

    ``diagonal`` and ``offdiagonal`` hold the tridiagonal matrix reached
    before the failure, ``info`` the solver diagnostic.
    '''

    def __init__(self, msg, diagonal=None, offdiagonal=None, info=None):
        super().__init__(msg)
        self.diagonal = diagonal
        self.offdiagonal = offdiagonal
        self.info = info


class StructuralError(StokesBlockError):
    """Raised when a computed spectrum violates the expected inertia pattern."""

    def __init__(self, msg, offending=()):
        super().__init__(msg)
        self.offending = tuple(offending)


class EndpointCollisionError(StokesBlockError):
    """Raised when a spectral interval endpoint sits on an eigenvalue."""


class ScenarioError(StokesBlockError):
    """A module error raised while running one scenario, with its config."""

    def __init__(self, msg, config=None, cause=None):
        super().__init__(msg)
        self.config = config
        self.cause = cause


class SweepAborted(StokesBlockError):
    """A sweep stopped early; ``partial`` holds the reports computed so far."""

    def __init__(self, msg, partial=(), value=None, cause=None):
        super().__init__(msg)
        self.partial = list(partial)
        self.value = value
        self.cause = cause
