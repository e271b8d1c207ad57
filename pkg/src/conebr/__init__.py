"""Bochner-Riesz means on flat cones: kernels, a mode-sum oracle and experiments."""

__version__ = "0.1.0"
