"""Random charge-conserving covariant codes."""

__version__ = "0.1.0"
