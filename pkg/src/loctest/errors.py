"""Exception types shared across the package."""


class LoctestError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(LoctestError):
    """Malformed input text (DFA or Cayley table files).

    ``line`` is the 1-based line number of the offending input line when it
    is known, else None.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapExceeded(LoctestError):
    """A configurable resource bound was exceeded.

    ``limit`` is the configured bound, ``reached`` the count at which the
    computation gave up.
    """

    def __init__(self, what, limit, reached):
        self.what = what
        self.limit = limit
        self.reached = reached
        super().__init__(f"{what} exceeded cap {limit} (reached {reached})")


class MalformedWitness(LoctestError):
    """A witness references states, letters, or elements that do not exist
    in the instance it is being checked against, or is structurally unusable.
    """
