"""Early-mobility detection from chest and thigh accelerometers by segment voting."""

__version__ = "0.1.0"
