"""Numerical verification of slice Clifford analysis identities on axially symmetric domains."""

__version__ = "0.1.0"
