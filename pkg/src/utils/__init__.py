"""Utility functions for the alignment application"""
