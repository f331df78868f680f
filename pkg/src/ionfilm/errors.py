"""Exception hierarchy and warning categories.

Two error families map onto the CLI exit codes: ``InputError`` (exit 1,
bad or insufficient input) and ``ComputationError`` (exit 2, a numerical
procedure failed or hit a model singularity).
"""

from __future__ import annotations


class IonFilmError(Exception):
    """Base class for all toolkit errors."""


class InputError(IonFilmError):
    """Invalid, malformed, or insufficient input data / options."""


class ComputationError(IonFilmError):
    """A numerical procedure failed on otherwise valid input."""


# --- input errors -----------------------------------------------------------

class InsufficientData(InputError):
    pass


class NonPositiveInput(InputError):
    pass


class UnknownThickness(InputError):
    """No resistance-scale constant is calibrated for this thickness."""

    def __init__(self, d0: float, known: tuple[float, ...]):
        self.d0 = d0
        self.known = known
        super().__init__(
            f"no resistance-scale entry for thickness {d0} nm "
            f"(calibrated: {sorted(known)}); pass interpolate=True to enable "
            "log-linear interpolation between calibrated thicknesses"
        )


class SchemaError(InputError):
    """A CSV file violates its strict schema."""

    def __init__(self, message: str, path: str = "", row: int | None = None,
                 column: str | None = None):
        self.path = path
        self.row = row
        self.column = column
        loc = path
        if row is not None:
            loc += f":row {row}"
        if column is not None:
            loc += f":column {column!r}"
        super().__init__(f"{loc}: {message}" if loc else message)


# --- computation errors -----------------------------------------------------

class ThicknessExhausted(ComputationError):
    """Sputtering has consumed the conducting film thickness."""


class NonPositiveResistance(ComputationError):
    pass


class NonConvergence(ComputationError):
    def __init__(self, message: str, n_iterations: int = 0,
                 gradient_norm: float = float("nan")):
        self.n_iterations = n_iterations
        self.gradient_norm = gradient_norm
        super().__init__(message)


class SingularJacobian(ComputationError):
    pass


class NoTransition(ComputationError):
    """Resistance never leaves the normal state within the sweep."""


class NonMonotonicAmbiguity(ComputationError):
    """The transition criterion level is crossed more than once."""

    def __init__(self, crossings: list[float]):
        self.crossings = crossings
        super().__init__(
            f"criterion level crossed {len(crossings)} times at "
            f"T = {', '.join(f'{t:.4g} K' for t in crossings)}"
        )


class NonNegativeSlope(ComputationError):
    """dB_c2/dT must be negative for a superconducting transition."""


class ZeroSlope(ComputationError):
    """Hall slope is zero; carrier density is undefined."""


class Unreachable(ComputationError):
    """Target metric value lies outside the reachable range."""

    def __init__(self, message: str, lo: float = float("nan"),
                 hi: float = float("nan")):
        self.reachable = (lo, hi)
        super().__init__(message)


class NotMonotone(ComputationError):
    """Defensive monotonicity check on a forward metric failed."""


# --- warnings ----------------------------------------------------------------

class ExtrapolationWarning(UserWarning):
    """Model evaluated beyond its calibrated fluence range."""


class PhysicsViolationWarning(UserWarning):
    """A reported value contradicts a physical bound (e.g. SDE > absorption)."""
