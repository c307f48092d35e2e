"""Extremal admissible potentials on complex projective space."""
__version__ = "0.1.0"
