"""cdtoolkit - Confidence Dimension measurement and model ranking."""

__version__ = "1.0.0"

__all__ = ["__version__"]
