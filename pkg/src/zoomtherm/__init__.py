"""Zooming times, nested collections, induced schemes and countable-shift thermodynamics."""

__version__ = "0.1.0"
