"""Randomized-midpoint Langevin Monte Carlo."""
