"""Constituency parsing with bottom-up, top-down and in-order transition
systems under a shared stack-LSTM scoring model."""

__version__ = "0.1.0"
