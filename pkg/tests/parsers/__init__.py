"""Tests for netveil.parsers package."""
