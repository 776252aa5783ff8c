"""Exception hierarchy shared by every module.

Input problems and resource caps are ordinary errors. A ``TheoremViolation``
is different: it means a check that must hold for every valid input failed,
so either the implementation is wrong or the claimed property is false. It
always carries a witness.
"""


class VquadError(Exception):
    exit_code = 1


class InputError(VquadError, ValueError):
    """Malformed or out-of-contract input."""

    exit_code = 2


class DimensionError(InputError):
    pass


class CapExceeded(VquadError):
    """An enumeration would exceed the configured vector cap."""

    exit_code = 3


class TheoremViolation(VquadError, AssertionError):
    """A property that must hold failed; ``witness`` pins down where."""

    exit_code = 4

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness

    def __str__(self):
        base = super().__str__()
        if self.witness is None:
            return base
        return f"{base} (witness: {self.witness!r})"
