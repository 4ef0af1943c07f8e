"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a dataset or parameter contract."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations
