"""Frequency-bin Bell state analyzer design and simulation toolkit."""

__version__ = "1.0.0"
