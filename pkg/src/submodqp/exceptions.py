"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user input: malformed data, violated preconditions, bad flags."""


class NumericalError(RuntimeError):
    """A solver lost its numerical invariants (corrupted state, failed factorization)."""
