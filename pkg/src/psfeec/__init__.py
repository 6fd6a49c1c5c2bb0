"""Finite element exterior calculus on Powell-Sabin splits."""

__version__ = "0.1.0"
