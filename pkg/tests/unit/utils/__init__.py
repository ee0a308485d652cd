"""Unit tests for utilities."""