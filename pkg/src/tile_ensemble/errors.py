"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (wrong color space, bad range, ...)."""


class ShapeMismatchError(ValueError):
    """Two arrays that must agree in shape do not."""


class AdapterError(RuntimeError):
    """Base class for failures talking to an external enhancer or predictor process."""


class AdapterExitError(AdapterError):
    """The external process exited or closed its stdout."""


class MalformedFrameError(AdapterError):
    """A response frame had a bad magic, bad header, or was truncated."""


class AdapterShapeError(AdapterError, ShapeMismatchError):
    """The response frame header disagrees with the request shape."""


class AdapterTimeoutError(AdapterError):
    """No complete response arrived within the configured timeout."""
