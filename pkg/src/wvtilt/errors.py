"""Exception and warning types shared across the package."""


class WvaError(ValueError):
    """Base class for invalid inputs or infeasible requests."""


class GridTooNarrow(WvaError):
    pass


class NonUniformGrid(WvaError):
    pass


class SingularPhase(WvaError):
    """Raised when the interferometer phase is too close to zero for a finite weak value."""


class DivergentMMT(WvaError):
    """Raised when the minimum measurable tilt is infinite (bright-port operation, phi = pi)."""


class InfeasiblePostselection(WvaError):
    pass


class InsufficientData(WvaError):
    pass


class DegenerateFit(WvaError):
    pass


class Infeasible(WvaError):
    pass


class WeakRegimeWarning(UserWarning):
    """The first-order weak-value expansion is being used outside its validity range."""


class LocalOscillatorWarning(UserWarning):
    """Local oscillator is not much brighter than the signal beam."""
