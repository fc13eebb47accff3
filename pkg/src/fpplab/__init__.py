"""First-passage percolation laboratory on discretized random media."""

__version__ = "0.1.0"
