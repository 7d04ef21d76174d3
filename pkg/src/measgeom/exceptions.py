"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation problems exit with 1,
numerical problems with 2.
"""


class MeasGeomError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MeasGeomError, ValueError):
    pass


class MeshParseError(InvalidArgumentError):
    """Raised when a mesh file cannot be parsed.

    The offending (1-based) line number is kept in ``lineno``.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DatasetFormatError(InvalidArgumentError):
    """Missing or inconsistent files in a dataset/embedding directory."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)


class NumericalDegeneracyError(MeasGeomError, ArithmeticError):
    pass


class ConvergenceError(NumericalDegeneracyError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class UnsupportedStructureError(MeasGeomError):
    """The data does not have the circular structure an analysis requires."""


class ProvenanceError(InvalidArgumentError):
    """Inputs were produced under different configurations."""
