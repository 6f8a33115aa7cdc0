"""Entropy-penalized density matrix estimation."""
