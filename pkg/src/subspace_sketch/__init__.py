"""Gaussian sketching of low-dimensional subspaces.

Exact subspace geometry, closed-form predictions of how it changes under a
Gaussian random projection, sketch-size planning, and a seeded Monte Carlo
engine that measures how often the predictions fail.
"""

__version__ = "0.1.0"
