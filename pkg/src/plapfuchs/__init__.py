"""Numerics for p-Laplace equations with Fuchsian-type singular potentials."""

__version__ = "0.1.0"
