"""
LRL laboratory - numerical experiments on Kepler-type systems and their Laplace-Runge-Lenz vectors.
"""

__version__ = "1.0.0"
