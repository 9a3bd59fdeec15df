"""Bootstrap percolation laboratory."""

__version__ = "1.0"
