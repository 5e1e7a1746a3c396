"""Exception types shared across the package."""


class LipfreeError(Exception):
    pass


class ValidationError(LipfreeError, ValueError):
    """Input violates a documented precondition."""


class OutOfRangeError(LipfreeError, LookupError):
    """An element or index falls outside the finite structure that was built."""


class ResourceError(LipfreeError, RuntimeError):
    """A configured size cap would be exceeded."""


class ConvergenceError(LipfreeError, RuntimeError):
    pass


class UnsupportedError(LipfreeError, NotImplementedError):
    pass
