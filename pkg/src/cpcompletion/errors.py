"""Exception hierarchy shared by all modules."""


class CompletionError(ValueError):
    """Base class for every error raised by this package."""


class ParseError(CompletionError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BoundsError(CompletionError):
    pass


class DuplicateEntry(CompletionError):
    pass


class EmptyIndexSet(CompletionError):
    pass


class FullIndexSet(CompletionError):
    pass


class ModeOutOfRange(CompletionError):
    pass


class EmptyInput(CompletionError):
    pass


class InsufficientRowSamples(CompletionError):
    def __init__(self, row, count, rank):
        self.row, self.count, self.rank = row, count, rank
        super().__init__(
            f"mode-d row {row} has {count} observed entries, fewer than rank {rank}")


class BasisNotObserved(CompletionError):
    pass


class EmptySelection(CompletionError):
    pass


class SingularSystem(CompletionError):
    pass


class FieldTooSmall(CompletionError):
    pass


class InvalidEpsilon(CompletionError):
    pass


class InvalidIsize(CompletionError):
    pass


class OrderTooSmall(CompletionError):
    pass
