"""Simulation and inference for pure-jump transaction-level prices with drift."""

__version__ = "0.1.0"
