"""Exception hierarchy.

Input problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`; the CLI maps them to exit codes 2 and 3.
"""


class CQRLabError(Exception):
    pass


class InputError(CQRLabError):
    pass


class NumericalError(CQRLabError):
    pass


class ExpressionSyntaxError(InputError):
    """Malformed expression text. ``offset`` is a byte offset into the UTF-8 input."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifier(InputError):
    def __init__(self, name, offset=None):
        where = "" if offset is None else f" (at byte {offset})"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.offset = offset


class MetricValidationError(InputError):
    pass


class UnknownName(InputError):
    pass


class MissingField(InputError):
    pass


class DomainError(NumericalError):
    pass


class SingularMetric(NumericalError):
    pass


class OrderTooLow(NumericalError):
    pass


class VarianceMismatch(CQRLabError):
    pass


class ConformallyFlat(CQRLabError):
    """Raised when the Weyl tensor vanishes; ``report`` still carries the diagnostics."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotApplicable(CQRLabError):
    pass


class ConditionViolated(CQRLabError):
    pass


class NoTransversal(CQRLabError):
    pass


class DimensionError(CQRLabError):
    pass


class NotNull(CQRLabError):
    pass


class SignatureError(CQRLabError):
    pass


class DegenerateFrame(CQRLabError):
    pass
