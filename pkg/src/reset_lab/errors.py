"""Exception types shared across the library."""


class ResetLabError(Exception):
    """Base class for library errors."""


class DimensionError(ResetLabError, ValueError):
    """Matrix or vector dimensions are inconsistent."""


class NumericalError(ResetLabError, RuntimeError):
    """A numerical routine failed to converge or produced garbage."""


class NoCrossingError(ResetLabError, RuntimeError):
    """No switching-function crossing within the search cap.

    Legitimate when the flow matrix is Hurwitz (trajectories may decay
    without ever re-crossing); suspicious otherwise.
    """

    def __init__(self, message, hurwitz=None):
        super().__init__(message)
        self.hurwitz = hurwitz


class DegenerateImageError(ResetLabError, RuntimeError):
    """A jump image landed exactly in the reset subspace; the direction map is undefined there."""


class AlignmentError(ResetLabError, RuntimeError):
    """No real eigenvalue of the return-map matrix aligns with the orbit direction."""


class UnsupportedConfigurationError(ResetLabError, ValueError):
    """The requested analysis does not apply to this system shape."""


class ScenarioError(ResetLabError, ValueError):
    """Scenario file is malformed or internally inconsistent."""


class EventLocalizationError(NumericalError):
    """Event bisection failed; carries the offending bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
