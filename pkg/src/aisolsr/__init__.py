"""Deterministic MANET simulator: baseline OLSR vs. immune-inspired AIS-OLSR."""

__version__ = "0.1.0"
