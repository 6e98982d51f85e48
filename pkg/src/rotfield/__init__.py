"""Exact rotating-field states of the Pauli and Dirac equations."""

__version__ = "0.1.0"
