"""Simulation and estimation lab for contemporaneous aggregation of
random-coefficient AR(1) processes and nearest-neighbour lattice fields."""

__version__ = "0.1.0"
