"""Entanglement criteria from randomized collective spin measurements."""

__version__ = "0.1.0"
