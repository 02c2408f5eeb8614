"""High-precision renormalization of circle maps with a flat interval."""

__version__ = "0.1.0"
