"""Integration tests for API and full workflows"""
