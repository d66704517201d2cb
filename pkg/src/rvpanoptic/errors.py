"""Exception hierarchy shared by every stage of the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(PipelineError):
    """An operation received an empty point cloud or an all-empty map."""


class DegeneratePoint(PipelineError):
    """A point sits at the sensor origin and has no defined direction."""


class ShapeError(PipelineError):
    """Array dimensions do not match the operation's contract."""


class InvalidWindow(PipelineError):
    """Fill window length must be odd and at least 3."""


class InvalidParams(PipelineError):
    """Parameter values outside their documented domain."""


class LabelError(PipelineError):
    """A class label is outside the valid range."""


class FormatError(PipelineError):
    """A binary file does not follow the expected layout."""


class IoError(PipelineError):
    """A file could not be read or written."""


class ConsistencyError(PipelineError):
    """Paired files disagree (e.g. label count vs. scan point count)."""


class RangeError(PipelineError):
    """A value cannot be represented in the target encoding."""


class ConfigError(PipelineError):
    """Configuration text could not be parsed or validated."""


class OracleScaleError(PipelineError):
    """A brute-force oracle was asked to run beyond its test-scale limit."""


class EmptyScene(PipelineError):
    """Scene generation produced no ray hits."""
