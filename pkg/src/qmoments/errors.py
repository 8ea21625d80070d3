"""Exception hierarchy shared by the simulator, estimators and CLI."""


class QMomentsError(Exception):
    """Base class for all package errors."""


class CircuitError(QMomentsError, ValueError):
    """Malformed circuit or an illegal operation during execution."""


class CapacityError(QMomentsError):
    """A simulation would exceed the configured qubit/dimension cap."""


class NumericalError(QMomentsError, ArithmeticError):
    """An estimate or oracle is numerically unusable (e.g. nonpositive moment)."""


class BudgetError(QMomentsError):
    """A requested experiment exceeds the prepared-copy budget guard."""
