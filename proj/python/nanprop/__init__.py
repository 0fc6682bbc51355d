"""NaN-propagation sparsity tracing for black-box functions."""

from ._core import (
    BaselineInvalid,
    BlackBoxError,
    ConfigError,
    DecompressionAmbiguity,
    DimensionMismatch,
    Error,
    NanIncompatible,
    ParseError,
    Pattern,
    color,
    compare,
    compressed_jacobian,
    fixture_names,
    payload_decode,
    payload_encode,
    speedup,
    trace,
    trace_fixture,
)

__all__ = [
    "BaselineInvalid",
    "BlackBoxError",
    "ConfigError",
    "DecompressionAmbiguity",
    "DimensionMismatch",
    "Error",
    "NanIncompatible",
    "ParseError",
    "Pattern",
    "color",
    "compare",
    "compressed_jacobian",
    "fixture_names",
    "payload_decode",
    "payload_encode",
    "speedup",
    "trace",
    "trace_fixture",
]
