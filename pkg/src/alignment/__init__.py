"""Speech timing, word/action relevance and start-time scheduling"""

from src.alignment.embeddings import EmbeddingStore, load_embeddings, relevance_matrix
from src.alignment.oracle import brute_force_solve
from src.alignment.plan import load_catalog, load_plan, parse_catalog, parse_plan, tokenize, validate_plan
from src.alignment.playback import render_gantt, simulate
from src.alignment.scheduler import action_score, check_constraints, greedy_schedule, solve
from src.alignment.timeline import build_timeline, load_lexicon

__all__ = [
    "EmbeddingStore",
    "action_score",
    "brute_force_solve",
    "build_timeline",
    "check_constraints",
    "greedy_schedule",
    "load_catalog",
    "load_embeddings",
    "load_lexicon",
    "load_plan",
    "parse_catalog",
    "parse_plan",
    "relevance_matrix",
    "render_gantt",
    "simulate",
    "solve",
    "tokenize",
    "validate_plan",
]
