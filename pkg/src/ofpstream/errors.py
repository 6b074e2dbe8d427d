"""Exception hierarchy shared by all ofpstream modules."""


class OfpError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(OfpError, ValueError):
    pass


class InvalidInputError(OfpError, ValueError):
    pass


class DegenerateWindowError(InvalidConfigError):
    """A synthesis-window denominator vanished at some hop phase."""

    def __init__(self, phase: int, value: float, eps: float):
        self.phase = phase
        self.value = value
        super().__init__(
            f"synthesis denominator at hop phase {phase} is {value:.3e} (< eps={eps:.1e})"
        )


class PredictorFault(OfpError, RuntimeError):
    """The predictor broke its contract; the stream is aborted."""


class StreamStateError(OfpError, RuntimeError):
    pass


class NotReadyError(StreamStateError):
    pass


class OutOfRangeError(OfpError, IndexError):
    pass


class DegenerateEstimateError(InvalidInputError):
    pass


class WavFormatError(OfpError, ValueError):
    """Malformed or unsupported RIFF/WAVE data."""
