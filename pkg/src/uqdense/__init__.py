"""Probabilistic regression with MC dropout and direct probability heads."""
