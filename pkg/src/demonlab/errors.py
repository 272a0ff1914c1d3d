"""Exception and warning types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input value violates a declared invariant.

    Covers malformed probability vectors, non-Hermitian or non-unit-trace
    matrices, bad geometry, and inconsistent configuration.
    """


class ProtocolError(RuntimeError):
    """Raised when an engine transition is attempted out of order.

    ``kind`` is a stable machine-readable tag, e.g. ``partition-already-in``,
    ``partition-absent``, ``must-erase-first``, ``correlation-lost``,
    ``uncorrelated-expansion``, ``record-mismatch``, ``erase-overdraw``.
    """

    def __init__(self, kind: str, message: str = ""):
        self.kind = kind
        super().__init__(message or kind)


class CorruptCodewordError(ValueError):
    """Raised when a codeword cannot have been produced by the encoder."""


class SearchSpaceError(ValidationError):
    """Raised when a policy-enumeration request is too large to exhaust.

    Carries ``estimate``, the number of distinct behaviours (or transition
    tables) implied by the requested bounds.  A subclass of
    ValidationError: the request, not the simulation, is at fault.
    """

    def __init__(self, estimate: int, limit: int):
        self.estimate = estimate
        self.limit = limit
        super().__init__(
            f"policy space needs more than {limit} behaviours "
            f"(estimate: {estimate}); tighten the bounds"
        )


class BlankEraseWarning(UserWarning):
    """Erasing already-blank memory: a free no-op, but usually a logic bug."""
