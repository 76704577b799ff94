"""Exception types shared across the package."""


class LocalRecError(Exception):
    """Base class for every error raised by this package."""


class DataFormatError(LocalRecError):
    """An input file is unreadable or a row does not parse under its schema."""


class ConfigError(LocalRecError):
    """An argument or configuration value violates a documented constraint."""


class EmptyDatasetError(LocalRecError):
    """Preprocessing removed every user."""


class TrainingError(LocalRecError):
    """Model training failed, e.g. a singular system or a diverging loss."""


class MetricError(LocalRecError):
    """A ranking metric is undefined for the given input."""
