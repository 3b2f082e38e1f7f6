"""Multi-criteria evaluation of radar resource management algorithms."""

__version__ = "0.1.0"
