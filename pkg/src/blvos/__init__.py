"""Simulation and design-space exploration of block-level voltage-overscaled multipliers."""

__version__ = "0.1.0"
