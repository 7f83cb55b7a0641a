"""Synchronization strings, insertion-deletion channel simulations and
edit-distance tree codes."""

__version__ = "0.1.0"
