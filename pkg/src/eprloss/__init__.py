"""Linearized noise simulator for EPR squeezing under beamsplitter loss."""

__version__ = "0.1.0"
