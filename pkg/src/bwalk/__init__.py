"""Moment theory of branching random walks with heavy-tailed jumps on Z^d."""
