"""Simulated systems under test."""
