"""Orthogonal-subscale stabilized finite elements for Stokes eigenproblems."""

__version__ = "0.1.0"
