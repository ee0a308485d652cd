"""E91 key distribution and image encryption toolkit."""

__version__ = "1.0.0"
