"""Static tensor-shape checking for a small imperative tensor language."""

__version__ = "0.1.0"
