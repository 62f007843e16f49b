"""Classifying pen-drawing recordings of controls and patients."""

__version__ = "0.1.0"
