"""Exception hierarchy shared by all axred modules."""


class AxredError(Exception):
    """Base class for every error raised by axred."""


class IllTypedInput(AxredError):
    """A value or binding does not match the sort it is used at."""


class UnsupportedQuantifier(AxredError):
    """A quantifier ranges over a sort with no finite domain."""


class SignatureError(AxredError):
    """A signature or theory is malformed."""


class SignatureMismatch(AxredError):
    """Two theories that must share a signature do not."""


class FieldError(AxredError):
    pass


class InvalidPrime(FieldError):
    pass


class OutOfRange(FieldError):
    pass


class DslError(AxredError):
    """Parse or type error in theory text, with a source position."""

    def __init__(self, message, line=None, col=None, end_col=None):
        self.message = message
        self.line = line
        self.col = col
        self.end_col = end_col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class CatalogError(AxredError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class FixtureError(AxredError):
    pass


class PreconditionError(AxredError):
    pass


class BindingError(AxredError):
    """A search specification leaves a sort unbound or binds it wrongly."""


class ReportVerificationError(AxredError):
    """A witness embedded in a report failed to re-verify."""
