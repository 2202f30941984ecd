"""Static token embeddings and word/action relevance"""

import io
import logging
import math
import re
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Sequence, Union

import numpy as np

from src.errors import DimError, FormatError, InvalidActionId
from src.models import ACTION_ID_REGEX, RelevanceMatrix, WordToken
from src.utils.io import read_bytes

logger = logging.getLogger(__name__)

BINARY_MAGIC = b"EMB1"
_ACTION_ID = re.compile(ACTION_ID_REGEX)


class EmbeddingStore:
    """Read-only token -> vector table"""

    def __init__(self, tokens: Sequence[str], matrix: np.ndarray):
        """
        Initialize store

        Args:
            tokens: Vocabulary, one entry per matrix row
            matrix: Array of shape (len(tokens), dim)
        """
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens) or matrix.shape[1] < 1:
            raise DimError(f"matrix shape {matrix.shape} does not fit {len(tokens)} tokens")
        index: Dict[str, int] = {}
        for row, token in enumerate(tokens):
            if token in index:
                raise FormatError(f"duplicate token {token!r}")
            index[token] = row
        matrix.setflags(write=False)
        self._index = index
        self._matrix = matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def tokens(self) -> List[str]:
        return list(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def get(self, token: str) -> np.ndarray:
        row = self._index.get(token)
        if row is None:
            return np.zeros(self.dim)
        return self._matrix[row]


def _parse_text(data: bytes) -> EmbeddingStore:
    try:
        lines = data.decode("utf-8").splitlines()
    except UnicodeDecodeError as e:
        raise FormatError(f"embedding file is not UTF-8: {e}") from e

    if not lines:
        raise FormatError("empty embedding file", 1)
    header = lines[0].split()
    if len(header) != 2 or not all(part.isdigit() for part in header):
        raise FormatError("header must be '<count> <dim>'", 1)
    count, dim = int(header[0]), int(header[1])
    if dim < 1:
        raise FormatError("dimension must be at least 1", 1)

    tokens: List[str] = []
    seen = set()
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        token = parts[0].lower()
        if len(parts) - 1 != dim:
            raise FormatError(f"expected {dim} values for {parts[0]!r}, got {len(parts) - 1}", line_no)
        if token in seen:
            raise FormatError(f"duplicate token {token!r}", line_no)
        try:
            row = [float(value) for value in parts[1:]]
        except ValueError as e:
            raise FormatError(f"bad number in row {parts[0]!r}", line_no) from e
        if not all(math.isfinite(value) for value in row):
            raise FormatError(f"non-finite value in row {parts[0]!r}", line_no)
        seen.add(token)
        tokens.append(token)
        rows.append(row)

    if len(tokens) != count:
        raise FormatError(f"header declares {count} tokens, body has {len(tokens)}")
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingStore(tokens, matrix)


def _parse_binary(data: bytes) -> EmbeddingStore:
    if len(data) < 12:
        raise FormatError("truncated binary header")
    count, dim = struct.unpack_from("<II", data, 4)
    if dim < 1:
        raise FormatError("dimension must be at least 1")
    if 12 + count * (4 + 4 * dim) > len(data):
        raise FormatError(f"header declares {count} tokens, file is too short")

    offset = 12
    tokens: List[str] = []
    seen = set()
    matrix = np.empty((count, dim), dtype=np.float64)
    for record in range(count):
        if offset + 4 > len(data):
            raise FormatError(f"truncated record {record}")
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        end = offset + length + 4 * dim
        if end > len(data):
            raise FormatError(f"truncated record {record}")
        try:
            token = data[offset:offset + length].decode("utf-8").lower()
        except UnicodeDecodeError as e:
            raise FormatError(f"record {record}: token is not UTF-8") from e
        if token in seen:
            raise FormatError(f"record {record}: duplicate token {token!r}")
        row = np.frombuffer(data, dtype="<f4", count=dim, offset=offset + length)
        if not np.all(np.isfinite(row)):
            raise FormatError(f"record {record}: non-finite value")
        seen.add(token)
        tokens.append(token)
        matrix[record] = row
        offset = end

    if offset != len(data):
        raise FormatError(f"header declares {count} tokens but trailing bytes remain")
    return EmbeddingStore(tokens, matrix)


def load_embeddings(source: Union[str, Path, bytes, BinaryIO]) -> EmbeddingStore:
    """
    Load an embedding table in text or binary format

    Text: a `<count> <dim>` header, then `token v1 ... vdim` per line.
    Binary: magic `EMB1`, u32 count, u32 dim, then per token a u32 byte
    length, the UTF-8 token and dim float32 values (all little-endian).
    Tokens are case-folded.

    Args:
        source: File path, raw bytes or a binary stream

    Returns:
        Embedding store
    """
    if isinstance(source, (str, Path)):
        data = read_bytes(source)
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()

    store = _parse_binary(data) if data.startswith(BINARY_MAGIC) else _parse_text(data)
    logger.debug("loaded %d embeddings of dim %d", len(store), store.dim)
    return store


def write_embeddings(store: EmbeddingStore, stream: BinaryIO, binary: bool = False) -> None:
    """Write a store in either file format"""
    if binary:
        stream.write(BINARY_MAGIC + struct.pack("<II", len(store), store.dim))
        for token in store.tokens:
            encoded = token.encode("utf-8")
            stream.write(struct.pack("<I", len(encoded)))
            stream.write(encoded)
            stream.write(store.get(token).astype("<f4").tobytes())
        return

    out = io.StringIO()
    out.write(f"{len(store)} {store.dim}\n")
    for token in store.tokens:
        out.write(token + " " + " ".join(repr(float(v)) for v in store.get(token)) + "\n")
    stream.write(out.getvalue().encode("utf-8"))


def embed_token(store: EmbeddingStore, token: str) -> np.ndarray:
    """Stored vector of a normalized word; zeros when out of vocabulary"""
    return store.get(token)


def action_parts(action_id: str) -> List[str]:
    if not _ACTION_ID.match(action_id or ""):
        raise InvalidActionId(action_id)
    return [part for part in action_id[1:-1].split("_") if part]


def embed_action(store: EmbeddingStore, action_id: str) -> np.ndarray:
    """Mean of the embeddings of the underscore-separated parts of an action id"""
    parts = action_parts(action_id)
    if not parts:
        return np.zeros(store.dim)
    return np.mean([embed_token(store, part) for part in parts], axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is all zeros"""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimError(f"cannot compare vectors of shape {u.shape} and {v.shape}")

    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        return 0.0
    value = float(np.dot(u, v) / (norm_u * norm_v))
    return min(1.0, max(-1.0, value))


def relevance_matrix(
    words: Sequence[WordToken],
    plan_actions: Iterable[str],
    store: EmbeddingStore,
    theta: float,
) -> RelevanceMatrix:
    """
    Score every word against every plan action

    Args:
        words: Speech tokens (rows)
        plan_actions: Action ids in plan order (columns)
        store: Embedding table
        theta: Retention threshold in [0, 1]

    Returns:
        Relevance matrix whose mask keeps entries >= theta
    """
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")

    plan_actions = list(plan_actions)
    action_vectors = {a: embed_action(store, a) for a in dict.fromkeys(plan_actions)}
    word_vectors = [embed_token(store, w.normalized) for w in words]

    values = np.zeros((len(word_vectors), len(plan_actions)))
    for i, wv in enumerate(word_vectors):
        for j, action_id in enumerate(plan_actions):
            values[i, j] = cosine(wv, action_vectors[action_id])

    matrix = RelevanceMatrix.from_values(values, theta)
    logger.debug("relevance matrix %s, %d pairs retained at theta=%s",
                 values.shape, int(matrix.mask.sum()), theta)
    return matrix
