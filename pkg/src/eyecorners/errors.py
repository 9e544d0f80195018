"""Exception types raised across the pipeline."""


class EyeCornerError(Exception):
    """Base class for all library errors."""


class ImageTooSmall(EyeCornerError, ValueError):
    pass


class OutOfBounds(EyeCornerError, ValueError):
    pass


class EmptyImage(EyeCornerError, ValueError):
    pass


class DimMismatch(EyeCornerError, ValueError):
    pass


class ParseError(EyeCornerError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFeature(EyeCornerError, ValueError):
    pass


class NoCandidates(EyeCornerError):
    pass


class EmptyCandidates(EyeCornerError, ValueError):
    pass


class NoPairs(EyeCornerError, ValueError):
    pass


class BoundsError(EyeCornerError, ValueError):
    pass


class GeometryError(EyeCornerError, ValueError):
    pass
