"""Finite-volume Anderson-model spectral statistics on mesoscopic energy windows.

Builds random Schrödinger operators Δ + V on boxes of Z^d, counts eigenvalues
in shrinking energy windows by matrix inertia, and runs ensemble experiments
for the limit laws of those counts (Poisson microscopic statistics, mesoscopic
law of large numbers and central limit theorem, localization and
box-partition approximation estimates).
"""

__version__ = "0.1.0"
