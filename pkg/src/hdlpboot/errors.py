"""Exception hierarchy.

Everything raised on purpose derives from :class:`HdlpbootError`. Config and
domain problems are also ``ValueError`` so plain ``except ValueError`` works;
numerical breakdowns are ``ArithmeticError``.
"""

from __future__ import annotations


class HdlpbootError(Exception):
    pass


class DimensionError(HdlpbootError, ValueError):
    pass


class ShapeError(HdlpbootError, ValueError):
    pass


class DomainError(HdlpbootError, ValueError):
    pass


class SampleSizeError(HdlpbootError, ValueError):
    pass


class DegenerateError(HdlpbootError, ValueError):
    pass


class DegenerateColumnError(DegenerateError):
    pass


class UnsupportedNorm(HdlpbootError, ValueError):
    pass


class AlphaGridError(HdlpbootError, ValueError):
    """The requested level maps to an order-statistic index outside 1..B."""


class ConfigError(HdlpbootError, ValueError):
    pass


class NumericalError(HdlpbootError, ArithmeticError):
    pass


class NotPsdError(NumericalError):
    pass
