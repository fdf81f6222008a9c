"""Chaos diagnostics for a damped inflaton and the two-mode Yang-Mills-Higgs system."""

__version__ = "0.1.0"
