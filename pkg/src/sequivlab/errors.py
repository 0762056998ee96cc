"""Exception hierarchy.

Each error class carries a ``category`` used by the command line front end to
pick an exit code.
"""


class SequivError(Exception):
    category = "numeric"


class ConfigError(SequivError, ValueError):
    category = "config"


class OutOfDomainError(SequivError, ValueError):
    pass


class PreconditionError(SequivError, ValueError):
    pass


class UnboundedPotentialError(SequivError, ValueError):
    pass


class ConstructionError(SequivError):
    pass


class DegeneratePointError(SequivError, ArithmeticError):
    pass


class IntegrationError(SequivError, RuntimeError):
    def __init__(self, message, last_state=None):
        super().__init__(message)
        # (t, x, v) of the last accepted step, if any
        self.last_state = last_state


class OperatorError(SequivError, RuntimeError):
    pass


class NormalizationError(SequivError, ValueError):
    pass
