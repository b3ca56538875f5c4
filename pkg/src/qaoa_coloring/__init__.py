"""QAOA graph coloring with one-hot and space-efficient binary encodings."""

__version__ = "0.1.0"
