"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad arguments: unknown labels, out-of-range parameters, shape mismatches."""


class NumericalContractError(ArithmeticError):
    """A numerical invariant (hermiticity, unitarity, positivity, ...) was violated."""
