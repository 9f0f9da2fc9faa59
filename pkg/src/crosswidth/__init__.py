"""Semiclassical resonance widths for 2x2 one-dimensional Schrodinger
systems with crossing classical trajectories, with an independent
complex-scaling oracle."""

__version__ = "0.1.0"
