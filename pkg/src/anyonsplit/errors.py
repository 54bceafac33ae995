"""Exception types shared across the package."""


class AnyonModelError(ValueError):
    """An anyon model (or part of one) violates one of its invariants."""


class UnknownChargeError(KeyError):
    """A charge label that does not belong to the model."""

    def __str__(self):
        return f'unknown charge label {self.args[0]!r}'


class UnsupportedOperationError(RuntimeError):
    """The model lacks the data needed for the requested operation."""
