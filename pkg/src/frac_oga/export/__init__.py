"""Convergence-table export."""
