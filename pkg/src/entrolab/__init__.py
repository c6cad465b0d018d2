"""Entanglement-growth toolkit: Renyi entropy rates, trace-norm inequalities and their bounds."""

__version__ = "0.1.0"
