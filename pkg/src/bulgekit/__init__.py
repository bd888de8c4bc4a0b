"""Bulge-test analysis of thin submicron membranes."""

__version__ = "0.1.0"
