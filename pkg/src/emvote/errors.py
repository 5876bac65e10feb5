"""Exception hierarchy shared by all pipeline stages."""


class EmVoteError(Exception):
    """Base class; the CLI maps every subclass to exit code 2."""


class ParseError(EmVoteError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class OrderingError(ParseError):
    pass


class SyncError(EmVoteError):
    pass


class GapError(SyncError):
    def __init__(self, stream, start, end):
        self.stream = stream
        self.interval = (start, end)
        super().__init__(f"{stream}: gap of {end - start:.3f} s between t={start:.3f} and t={end:.3f}")


class IdentityError(EmVoteError):
    pass


class WindowError(EmVoteError):
    pass


class LengthError(EmVoteError):
    pass


class ParameterError(EmVoteError):
    pass


class DataError(EmVoteError):
    pass


class CompatibilityError(EmVoteError):
    pass
