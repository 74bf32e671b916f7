"""Tests for apm-lab."""
