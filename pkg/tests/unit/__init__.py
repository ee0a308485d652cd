"""Unit tests for qsecure."""
