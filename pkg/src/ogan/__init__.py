"""Online generative falsification of STL requirements."""

__version__ = "0.1.0"
