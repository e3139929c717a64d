"""Compressed-ansatz VQE toolkit for H2 at statevector-simulation scale."""

__version__ = "0.1.0"
