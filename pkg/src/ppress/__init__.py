"""Error-bounded tabular compression with quality-aware configuration search."""

__version__ = "0.1.0"
