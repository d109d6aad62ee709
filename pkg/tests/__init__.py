"""Tests for treegraph."""
