"""Exact homological algebra engine."""
