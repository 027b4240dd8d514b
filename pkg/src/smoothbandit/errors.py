"""Shared exception types."""


class ConfigurationError(Exception):
    """Raised when a scenario/experiment configuration or input file is invalid."""
