"""Command-line interface for co-speech alignment"""
