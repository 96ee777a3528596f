"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class ConstraintError(ValueError):
    """An input violates a precondition the closed form relies on."""


class ConvergenceError(RuntimeError):
    """An iterative kernel ran out of budget before meeting its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class DivergenceError(RuntimeError):
    """The solver produced a non-finite objective."""


class UndefinedCorrelationError(ValueError):
    """Pearson correlation requested for a constant sequence."""


class MatrixFormatError(ValueError):
    """A matrix file is malformed."""

    def __init__(self, path, offset, reason):
        super().__init__(f"{path}: offset {offset}: {reason}")
        self.path = str(path)
        self.offset = offset
