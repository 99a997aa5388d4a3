"""Exception types shared across the package."""


class HashclustError(Exception):
    """Base class for all package errors."""


# --- digest computation ---

class EmptyInput(HashclustError):
    pass


class TooShort(HashclustError):
    pass


class DegenerateInput(HashclustError):
    pass


class MalformedDigest(HashclustError):
    """Raised when a serialized digest string cannot be parsed.

    `position` is the index of the first offending character, or -1 when
    the problem is structural (wrong field count, wrong length).
    """

    def __init__(self, message, position=-1):
        super().__init__(message)
        self.position = position


# --- PE parsing ---

class NotPe(HashclustError):
    pass


class NoImportTable(HashclustError):
    pass


class TruncatedFile(HashclustError):
    pass


class EmptyTable(HashclustError):
    pass


# --- features ---

class DimensionMismatch(HashclustError):
    pass


class BothEmpty(HashclustError):
    pass


class TooFewSamples(HashclustError):
    pass


# --- clustering ---

class KTooLarge(HashclustError):
    pass


class EmptyMatrix(HashclustError):
    pass


class SingleCluster(HashclustError):
    pass


# --- corpus ingestion ---

class MissingColumn(HashclustError):
    pass


class MalformedRow(HashclustError):
    def __init__(self, row_number, reason):
        super().__init__(f"row {row_number}: {reason}")
        self.row_number = row_number
        self.reason = reason
