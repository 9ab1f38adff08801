"""
Errors raised by the library; the command line maps them onto exit codes
"""


class LipexpError(Exception):
    pass


class DimensionMismatch(LipexpError, ValueError):
    pass


class NonFiniteInput(LipexpError, ValueError):
    pass


class LipschitzSpecError(LipexpError, ValueError):
    """
    Missing or malformed Lipschitz information for the requested bound
    """
    pass


class OutsideDomain(LipexpError, ValueError):
    pass


class InfeasibleStart(LipexpError, ValueError):
    """
    Guard logic needs a feasible current point (all g <= 0)
    """
    def __init__(self, message, constraint=None):
        LipexpError.__init__(self, message)
        self.constraint = constraint


class InconsistentData(LipexpError):
    """
    Refined lower bound crossed the refined upper bound: the constants are
    too small for the data
    """
    def __init__(self, message, indices=()):
        LipexpError.__init__(self, message)
        self.indices = tuple(indices)


class SingularDesign(LipexpError, ValueError):
    pass


class ModelError(LipexpError):
    pass


class NonCompliantStart(LipexpError, ValueError):
    pass


class ConfigError(LipexpError):
    pass
