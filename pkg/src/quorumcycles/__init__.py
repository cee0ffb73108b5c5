"""Cyclic quorum cycle routing with light-trail fault analysis."""

__version__ = "0.1.0"
