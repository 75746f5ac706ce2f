"""Finite enactive languages, tasks, weakness learning, causal identities and selves."""

__version__ = "0.1.0"
