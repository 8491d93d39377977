"""Hierarchical clustering by minimizing a continuous relaxation of structural entropy in hyperbolic space."""

__version__ = "0.1.0"
