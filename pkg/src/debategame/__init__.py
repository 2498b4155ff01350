"""Dialectical debate games: exact Markov solving, Monte Carlo simulation,
and strategic analysis of the induced 17x17 game."""

__version__ = "0.1.0"
