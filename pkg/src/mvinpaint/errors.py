"""Exception types shared across the package."""


class MvinpaintError(Exception):
    """Base class for all package errors."""


class ObjParseError(MvinpaintError):
    """Malformed OBJ input. Carries the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(MvinpaintError):
    """Degenerate or invalid geometry (empty bbox, coplanar hull input, ...)."""


class MaskSamplingError(MvinpaintError):
    """A mask generator exhausted its resampling budget."""


class GridError(MvinpaintError):
    """Image/grid dimension or modality mismatch."""


class BackendError(MvinpaintError):
    """Inpainting backend unreachable or returned an invalid response."""

    def __init__(self, message: str, retries: int = 0):
        self.retries = retries
        super().__init__(message)


class SessionNotFound(MvinpaintError):
    """Unknown edit-session id."""


class SessionBusy(MvinpaintError):
    """An inpaint is already in flight for this session."""
