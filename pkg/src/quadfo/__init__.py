"""Forced oscillations of a single-machine power system with a quadratic
restoring nonlinearity: multiple-scales resonance curves checked against
direct time-domain simulation."""

__version__ = "0.1.0"
