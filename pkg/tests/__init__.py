"""Tests for the hierarchical de Rham package."""
