"""Reduction scheduling, routing and fault experiments on 2-D grid graphs."""

__version__ = "0.1.0"
