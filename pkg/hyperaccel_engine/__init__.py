"""Exact hypergeometric recurrences, accelerated series and WZ certificate checks."""

__version__ = "1.0.0"
