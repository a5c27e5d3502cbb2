"""Simulation of analogue horizons in a discrete LC transmission line."""
