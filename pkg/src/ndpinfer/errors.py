"""Exception types shared across the package.

Everything derives from :class:`NdpError` (itself a ``ValueError``) so the
CLI can map any modeling/validation failure to exit code 1 while I/O
problems (plain ``OSError``) map to exit code 2.
"""


class NdpError(ValueError):
    """Base class for all domain and validation errors in this package."""


class DomainError(NdpError):
    """An argument is outside the mathematical domain of an operation."""


class ValidationError(NdpError):
    """Structured input (data, config, options) fails its invariants."""


class DegenerateBatchError(NdpError):
    """A weight vector carries no usable mass (all weights zero)."""


class DegenerateLawError(NdpError):
    """A weighted sample law is too degenerate for the requested operation."""


class UnsupportedQueryError(NdpError):
    """The requested functional is not supported by this computation path."""


class OracleCapError(NdpError):
    """Exact enumeration refused because the partition count is too large."""


class UnknownScenarioError(NdpError):
    """No built-in scenario is registered under the requested name."""
