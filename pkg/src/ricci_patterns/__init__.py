"""Combinatorial Ricci flow and degenerate circle patterns on closed surfaces."""

__version__ = "0.1.0"
