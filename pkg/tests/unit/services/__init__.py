"""Unit tests for services."""