"""Exception types shared across the package."""

from __future__ import annotations


class CfxError(Exception):
    """Base class for all package errors."""


class ParseError(CfxError):
    """Malformed input text; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(CfxError):
    """Data cannot be represented in, or read from, the requested format."""


class ShapeError(CfxError):
    """Array shapes or channel/length counts do not line up."""


class BandError(CfxError):
    """Warping band too narrow: no admissible alignment path exists."""


class TrainError(CfxError):
    """Training failed (empty data, divergence, degenerate labels)."""


class CapabilityError(CfxError):
    """Model lacks a capability the caller needs (e.g. input gradients)."""


class ConfigError(CfxError):
    """Invalid configuration value or file."""


class NoNeighborError(CfxError):
    """No instance of the requested class is available to retrieve."""


class MetricUnavailable(CfxError):
    """Metric undefined for this input (reported as absent, never as zero)."""
