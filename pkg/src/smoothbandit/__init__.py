"""Batched bandit simulation with smoothed empirical-Bayes estimation under
stochastically delayed, anonymous feedback."""

__version__ = "0.1.0"

from .errors import ConfigurationError

__all__ = ["ConfigurationError", "__version__"]
