"""Tests for streamgp package."""
