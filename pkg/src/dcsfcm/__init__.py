"""Fuzzy clustering of time series by the dynamics of their DCS conditional moments."""

__version__ = "0.1.0"
