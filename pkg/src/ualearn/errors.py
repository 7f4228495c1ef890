"""Exception types shared across the package."""


class UalearnError(Exception):
    """Base class for package-specific failures."""


class ParseError(UalearnError):
    """Malformed input file (CSV, container, checkpoint)."""


class ConfigError(UalearnError):
    """Invalid or inconsistent configuration."""


class DegenerateDataError(UalearnError):
    """Data that cannot support the requested computation."""


class IntegrityError(UalearnError):
    """Corrupt or truncated binary artifact."""


class OracleError(UalearnError):
    """The labeling oracle failed to produce a label."""
