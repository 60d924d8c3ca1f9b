"""Numerical laboratory for sparse domination of generalized singular
operators and their iterated commutators."""

__version__ = "0.1.0"
