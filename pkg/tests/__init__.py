"""Tests for sehs."""
