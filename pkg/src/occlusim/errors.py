"""Exception types raised across the toolkit."""


class OcclusimError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(OcclusimError):
    """Invalid or unsatisfiable configuration values."""


class CoverageCalibrationError(OcclusimError):
    """Particle-count calibration could not reach the coverage target."""


class DimensionMismatchError(OcclusimError):
    """Two frames or a frame and a stream disagree on width/height."""


class SpanError(OcclusimError):
    """A requested time window does not fit inside the available data."""


class ChecksumError(OcclusimError):
    """Stored file content does not match its recorded checksum."""


class MissingFileError(OcclusimError):
    """A file referenced by a manifest is absent."""


class SchemaVersionError(OcclusimError):
    """A manifest carries an unknown schema version."""
