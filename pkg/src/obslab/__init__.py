"""Adaptive velocity observers for mechanical systems with friction: I&I vs sliding mode."""

__version__ = "0.1.0"
