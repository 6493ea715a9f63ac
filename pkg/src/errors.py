#!/usr/bin/env python3
"""
Exception hierarchy for the GLCM feature-combination lab.

Domain errors do not derive from ValueError so pydantic validators
let them propagate untouched instead of wrapping them.
"""


class GlcmLabError(Exception):
    """Root of every error raised on purpose by this project"""


class UsageError(GlcmLabError):
    """Bad command-line input (exit code 1)"""


class DataError(GlcmLabError):
    """Bad data or a violated precondition (exit code 2)"""


class PgmParseError(DataError):
    def __init__(self, token, reason):
        self.token = token
        super().__init__(f"PGM header: {reason} (token {token!r})")


class PgmLengthError(DataError):
    pass


class UnsupportedFormatError(DataError):
    pass


class DimensionError(DataError):
    pass


class LevelRangeError(DataError):
    pass


class EmptyPairError(DataError):
    pass


class StratificationError(DataError):
    pass


class ConfigurationError(DataError):
    pass


class DegenerateTrainingError(DataError):
    pass


class DimensionMismatchError(DataError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")


class CellError(GlcmLabError):
    """A sweep cell failed; names the cell and keeps the original cause"""

    def __init__(self, classifier, combo_name, seed, cause):
        self.classifier = classifier
        self.combo_name = combo_name
        self.seed = seed
        self.cause = cause
        super().__init__(f"cell {classifier}/{combo_name} (seed {seed}) failed: {cause}")
