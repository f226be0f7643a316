"""Deterministic system-level simulator for 28 GHz multi-beam networks with multi-panel handsets."""

__version__ = "0.1.0"
