"""Static aspect weaving for HL, a small Julia-like language."""

__version__ = "0.1.0"
