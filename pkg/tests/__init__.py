"""Tests for clipped_mc."""
