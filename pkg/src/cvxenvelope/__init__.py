"""Discrete convex envelopes, rooftop obstacle problems and real Monge-Ampere geodesics on uniform grids."""

__version__ = "0.1.0"
