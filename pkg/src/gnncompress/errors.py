"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: FormatError -> 2,
ValidationError -> 3, VerificationError -> 4.
"""


class GnnCompressError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(GnnCompressError):
    """Malformed input: unparseable lines, bad tokens, zero multiplicities."""


class ValidationError(GnnCompressError):
    """Structurally parseable input that violates an invariant
    (out-of-range node ids, duplicate entries, non-positive weights, ...)."""


class VerificationError(GnnCompressError):
    """A compressed problem failed verification against its original."""
