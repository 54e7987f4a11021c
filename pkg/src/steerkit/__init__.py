"""Incompatibility and steering measures, local filters and verification tools."""

__version__ = "0.1.0"
