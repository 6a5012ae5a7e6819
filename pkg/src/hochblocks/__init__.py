"""Hochschild-type chain complexes for finite-dimensional factorizable ribbon Hopf algebras over finite fields."""

__version__ = "0.1.0"
