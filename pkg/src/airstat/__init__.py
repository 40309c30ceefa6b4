"""Arrival statistics for air-route transit records."""

__version__ = "0.1.0"
