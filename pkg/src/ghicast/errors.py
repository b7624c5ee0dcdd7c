"""Exception hierarchy shared by all ghicast modules."""


class GhicastError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(GhicastError, ValueError):
    """An argument is outside its documented range or otherwise invalid."""


class TimestampRangeError(ParameterError):
    """Timestamp outside the solar algorithm's 1950-2100 validity window."""


class ParseError(GhicastError, ValueError):
    """A CSV value or row could not be parsed; message names file and line."""


class IntegrityError(GhicastError, ValueError):
    """Loaded data violates an ordering, uniqueness, or completeness rule."""


class UnknownSiteError(GhicastError, KeyError):
    """A referenced site_id is not among the loaded sites."""


class SingularMatrixError(GhicastError, ValueError):
    """Normal equations are rank deficient; retry with ridge penalty > 0."""


class ShapeError(GhicastError, ValueError):
    """Array dimensions do not match the model's declared architecture."""


class TrainingFailureError(GhicastError, RuntimeError):
    """Every training start aborted (non-finite loss)."""


class MetricUndefinedError(GhicastError, ValueError):
    """Metric is undefined for these records (e.g. non-positive mean truth)."""


class ConfigError(GhicastError, ValueError):
    """Run configuration failed validation (unknown key, bad value)."""
