"""Bootstrap tests for high-dimensional means based on l_p-norms."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AlphaGridError, ConfigError, DegenerateColumnError, DegenerateError, DimensionError,
    DomainError, HdlpbootError, NotPsdError, NumericalError, SampleSizeError, ShapeError,
    UnsupportedNorm,
)
from .estimators import IDENTITY, CovModel, Hypothesis  # noqa: E402
from .hdtest import ProxyDraws, TestResult, lp_test, run_test  # noqa: E402
from .randgen import RngStream  # noqa: E402
