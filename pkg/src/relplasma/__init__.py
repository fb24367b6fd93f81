"""Linear electromagnetic response of a hot relativistic pair plasma."""

__version__ = "0.1.0"
