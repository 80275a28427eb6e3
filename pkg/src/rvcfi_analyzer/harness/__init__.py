"""Benchmark generation and attack scenarios."""
