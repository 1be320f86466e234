"""Quantum bit commitment simulator and no-go analyzer."""

__version__ = "1.0.0"
