"""Budgeted combinatorial multi-armed bandits with knapsack constraints."""

__version__ = "0.1.0"
