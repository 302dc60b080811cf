"""Simulation toolkit for orthogonal-state quantum bit commitment."""

__version__ = "0.1.0"
