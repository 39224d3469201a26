"""Attractor classification through restricted Koopman semigroups."""
__version__ = "0.1.0"
