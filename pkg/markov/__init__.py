"""Exact kernels, value solves and rollouts for augmented Markov games."""
