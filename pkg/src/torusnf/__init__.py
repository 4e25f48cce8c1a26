"""Normal forms and quasimodes for periodic pseudo-differential operators."""

__version__ = "0.1.0"
