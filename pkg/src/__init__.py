"""Co-speech alignment - schedule robot expressions and gestures against speech"""

__version__ = "0.1.0"
