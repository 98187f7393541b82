"""Simulation and exact analysis of tree-building random walks and
preferential-attachment trees."""

__version__ = "0.1.0"
