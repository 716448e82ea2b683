"""Test suite for GMI survival."""
