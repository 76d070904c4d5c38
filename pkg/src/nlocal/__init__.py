"""Correlation tensors on star networks: hidden-variable models, normal
forms, separable quantum realizations and membership certificates."""

__version__ = "0.1.0"
