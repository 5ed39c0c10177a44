"""Exact spectral sequences and the noncommutative Leray spectral sequence."""
