"""Multiple-access channels carried by a single classical or quantum particle."""

__version__ = "0.1.0"
