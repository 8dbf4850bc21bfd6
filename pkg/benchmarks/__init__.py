"""Benchmarks for sehs."""
