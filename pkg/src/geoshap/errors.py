"""Exception hierarchy. The CLI maps each class to a distinct exit code."""


class GeoShapError(Exception):
    """Base class for all package errors."""


class ValidationError(GeoShapError):
    """Invalid input data or configuration."""


class DataError(GeoShapError):
    """Dataset ingestion failure (missing columns, bad cells, no usable rows)."""


class OracleError(GeoShapError):
    """A prediction oracle failed or returned unusable output."""


class ModelError(GeoShapError):
    """A built-in trainer could not fit (rank deficiency, non-PD kernel, ...)."""


class DesignError(GeoShapError):
    """Coalition design problems: budget too small, duplicates, rank deficiency."""


class EfficiencyError(GeoShapError):
    """Attribution components failed the additivity check."""


class ExplainError(GeoShapError):
    """Row-level explanation failures, aggregated with their row ids."""

    def __init__(self, message, row_ids=()):
        super().__init__(message)
        self.row_ids = tuple(row_ids)


class AnalysisError(GeoShapError):
    """Downstream analysis failure (SVC, bandwidth search, bootstrap, masking)."""


class OutputError(GeoShapError):
    """Artifact could not be written."""


class BridgeError(GeoShapError):
    """Base class for external model bridge failures."""


class BridgeHandshakeError(BridgeError):
    """Server did not complete the ready handshake."""


class BridgeTimeoutError(BridgeError):
    """Server did not answer within the session timeout."""


class BridgeProtocolError(BridgeError):
    """Malformed or mismatched bridge message."""


class BridgeTransportError(BridgeError):
    """Server process died or the pipe broke mid-request."""
