"""Tolerant - ベイズ許容区間ツールキット."""

__version__ = "0.1.0"
