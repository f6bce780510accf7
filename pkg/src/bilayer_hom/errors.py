"""Exception types shared across the package."""


class HomogError(ValueError):
    """Base class for all domain errors raised by bilayer_hom."""


class NotInSet(HomogError):
    pass


class NotInNs(HomogError):
    pass


class GammaOutOfRange(HomogError):
    pass


class UnsupportedTau(HomogError):
    """tau > 0 requested for a slip direction other than e1."""


class Unconstrained(HomogError):
    """Horizontal rank-one connections for s = e1 do not fix the partner slip."""


class IncompatibleRotation(HomogError):
    pass


class PeriodTooCoarse(HomogError):
    pass


class StripNotRigid(HomogError):
    def __init__(self, message, residual=None, layer=None):
        super().__init__(message)
        self.residual = residual
        self.layer = layer


class NotPeriodic(HomogError):
    pass


class GeometryError(HomogError):
    pass


class ConfigError(HomogError):
    """Invalid run configuration; ``name`` identifies the violated precondition."""

    def __init__(self, name, message):
        super().__init__(f"{name}: {message}")
        self.name = name
