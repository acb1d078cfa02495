"""Compiler and inference toolkit for a blockless Stan-like modelling language."""

__version__ = "0.1.0"
