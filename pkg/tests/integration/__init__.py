"""Integration tests for apm-lab."""
