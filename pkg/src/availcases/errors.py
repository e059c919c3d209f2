"""Exception hierarchy.

Each class carries the process exit code the command-line front end uses
when the error escapes a subcommand.
"""

from __future__ import annotations


class AvailCasesError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 2


class UsageError(AvailCasesError):
    exit_code = 1


class DataError(AvailCasesError, ValueError):
    """Invalid input data: bad shapes, bad cells, too few observations."""

    exit_code = 2


class NumericalError(AvailCasesError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy answer."""

    exit_code = 3


class SingularMatrixError(NumericalError):
    pass


class NegativeEigenvalueError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class SimulationError(AvailCasesError):
    """A simulation finished with zero successful replications."""

    exit_code = 4
