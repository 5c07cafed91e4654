"""Exception hierarchy shared by every module."""


class AllelofearError(Exception):
    pass


class DomainError(AllelofearError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class AssumptionViolation(DomainError):
    """A fear field breaks one of the standing regularity/positivity assumptions."""


class PreconditionError(AllelofearError, ValueError):
    pass


class KindError(AllelofearError, ValueError):
    """An equilibrium of the wrong type was supplied (e.g. a node where a saddle is needed)."""


class IntegrationError(AllelofearError, RuntimeError):
    pass


class StiffnessError(IntegrationError):
    pass


class DivergenceError(IntegrationError):
    pass


class ConfigError(AllelofearError, ValueError):
    pass


class NumericalError(AllelofearError, ArithmeticError):
    """A linear-algebra or root-finding step is ill-conditioned or defective."""
