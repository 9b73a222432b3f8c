"""Pulsed and CW photon statistics of a strongly coupled quantum-dot cavity."""

__version__ = "0.1.0"
