"""Simulation lab for online Bayesian persuasion with an unknown prior and unknown receiver utilities."""

__version__ = "0.1.0"
