"""Operator assembly, dictionary, greedy solver, manufactured problem, metrics."""
