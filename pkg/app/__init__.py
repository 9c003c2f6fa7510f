"""Coupled relaxation-oscillator reservoir lab"""

__version__ = "0.1.0"
