"""Semantic direction learning by constrained alternating subspace minimization."""
