"""Configuration management for the application"""

import os
from dotenv import load_dotenv

# Load environment variables (logging verbosity only)
load_dotenv()


class Config:
    """Application defaults

    Algorithm constants are fixed here and overridden per run through CLI
    flags; nothing below except logging is read from the environment.
    """

    # Relevance filtering and alignment window
    THETA: float = 0.7
    DELTA_S: float = 0.3

    # Decision grid
    TICK_S: float = 0.05
    TAIL_MARGIN_S: float = 1.0

    # Baseline word duration rule (placeholder values, tunable via lexicon file)
    RATE_S_PER_CHAR: float = 0.08
    MIN_WORD_S: float = 0.15
    MAX_WORD_S: float = 0.80

    # Speech rate factors
    SPEED_FACTORS = {"slow": 1.25, "normal": 1.0, "fast": 0.8}

    # Optional punctuation pauses
    COMMA_PAUSE_S: float = 0.20
    SENTENCE_PAUSE_S: float = 0.35

    # Corpus dedup
    HAMMING_THRESHOLD: int = 3

    # Solver and oracle bounds
    MAX_TABLE_CELLS: int = 50_000_000
    MAX_ELIMINATION_CELLS: int = 10**9
    CHUNK_CELLS: int = 1 << 22
    ORACLE_MAX_ENUMERATIONS: int = 10**8

    # Rendering
    GANTT_WIDTH: int = 100

    # Debug
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "WARNING")
