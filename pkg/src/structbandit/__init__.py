"""Structured stochastic linear bandits with norm-regularized confidence ellipsoids."""

__version__ = "0.1.0"
