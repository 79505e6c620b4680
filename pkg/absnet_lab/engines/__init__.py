"""Numerical engines of the simulation lab."""
