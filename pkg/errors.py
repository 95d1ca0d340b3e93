"""Exception hierarchy for the possession-value pipeline."""

from typing import Any, Dict, Optional


class PipelineError(Exception):
    """Base class for every error the pipeline raises on purpose."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Structured form written to stderr by the CLI."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class IngestError(PipelineError):
    """Unreadable or malformed source data."""


class GeometryError(PipelineError, ValueError):
    """Ball state outside the pitch."""


class DatasetError(PipelineError):
    """Dataset construction or split precondition violated."""


class SchemaMismatchError(PipelineError):
    """Model applied to rows built with a different feature schema."""


class TrainingError(PipelineError):
    """Model training could not run."""


class ValuationError(PipelineError):
    """Credit assignment or aggregation precondition violated."""


class SelectionError(PipelineError):
    """Not enough eligible players to fill a formation."""


class ConfigError(PipelineError):
    """Invalid configuration; `details["problems"]` lists every offending key."""


class MissingStageInputError(PipelineError):
    """An upstream stage has not produced its outputs yet."""
