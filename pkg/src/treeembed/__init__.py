"""Embedding bounded-degree spanning trees into dense non-extremal graphs."""

__version__ = "0.1.0"
