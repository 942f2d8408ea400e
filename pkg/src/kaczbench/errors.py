"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible shapes."""


class DegenerateRowError(ValueError):
    """A matrix row is identically zero and cannot be projected onto."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(
            f"row {row} has zero norm; sampling probabilities and projection "
            f"denominators are undefined for zero rows"
        )


class EmptyRangeError(ValueError):
    """A row-index range is empty or out of bounds."""


class ConvergenceError(RuntimeError):
    """An iterative reference solver ran out of its iteration budget.

    Carries the best iterate found so far in ``best_x``.
    """

    def __init__(self, message: str, best_x=None):
        self.best_x = best_x
        super().__init__(message)


class SpectralConvergenceError(RuntimeError):
    """Singular-value estimation failed to converge.

    ``extreme`` names which estimate failed ("sigma_max" or "sigma_min").
    """

    def __init__(self, extreme: str, message: str = ""):
        self.extreme = extreme
        super().__init__(message or f"estimation of {extreme} did not converge")


class SystemFormatError(ValueError):
    """A system file is malformed.  ``offset`` is the file offset in bytes."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnsupportedVersionError(SystemFormatError):
    """A system file declares a format version this code does not read."""


class TransportProtocolError(RuntimeError):
    """Ranks disagree on a collective call (e.g. mismatched vector lengths)."""
