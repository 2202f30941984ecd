"""Pytest configuration and fixtures"""

import shutil
import tempfile
from pathlib import Path

import pytest

from src.alignment.embeddings import load_embeddings, relevance_matrix
from src.alignment.plan import load_catalog, load_plan, tokenize
from src.alignment.timeline import build_timeline
from src.models import ActionCatalog, AlignConfig

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
FIXTURE_DIR = DATA_DIR / "happy_new_year"


@pytest.fixture(scope="function")
def temp_dir():
    """Create a temporary directory for tests"""
    tmpdir = tempfile.mkdtemp()
    yield Path(tmpdir)
    shutil.rmtree(tmpdir)


@pytest.fixture
def fixture_dir():
    """Directory holding the greeting fixture files"""
    return FIXTURE_DIR


@pytest.fixture
def greeting_plan():
    """'Happy New Year to you too!' with <bless>, <hello> and <nod>"""
    return load_plan(FIXTURE_DIR / "plan.json")


@pytest.fixture
def greeting_catalog():
    return load_catalog(FIXTURE_DIR / "catalog.json")


@pytest.fixture
def greeting_store():
    return load_embeddings(FIXTURE_DIR / "embeddings.txt")


@pytest.fixture
def greeting_words(greeting_plan):
    return tokenize(greeting_plan.speech_text)


@pytest.fixture
def greeting_timeline(greeting_words):
    """Default timing: starts 0, .40, .64, .96, 1.12, 1.36; ends at 1.60"""
    return build_timeline(greeting_words)


@pytest.fixture
def greeting_matrix(greeting_words, greeting_plan, greeting_store):
    return relevance_matrix(greeting_words, greeting_plan.action_ids, greeting_store, 0.7)


@pytest.fixture
def align_config():
    return AlignConfig()


@pytest.fixture
def sample_catalog():
    """Small catalog with one conflicting pair"""
    return ActionCatalog(
        entries={
            "<hello>": {"duration_s": 1.2, "channel": "motion"},
            "<nod>": {"duration_s": 0.8, "channel": "motion"},
            "<wave>": {"duration_s": 1.5, "channel": "motion"},
            "<handshake>": {"duration_s": 2.0, "channel": "motion"},
            "<smile>": {"duration_s": 1.0, "channel": "expression"},
        },
        conflicts=[("<wave>", "<handshake>")],
    )
