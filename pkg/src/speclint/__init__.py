"""Debugging, monitoring and falsification of bounded MITL specifications."""

__version__ = "0.1.0"
