"""Stakeless-match classification and schedule evaluation for four-team
double round-robin groups."""

__version__ = "0.1.0"
