"""Fuel-optimal guidance and closed-loop control for low-thrust satellite formations."""
__version__ = "0.1.0"
