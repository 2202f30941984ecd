"""File helpers"""

import os
import tempfile
from pathlib import Path
from typing import Union

from src.errors import MissingInput


def read_text(path: Union[str, Path]) -> str:
    """Read a UTF-8 input file, raising MissingInput when absent"""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(str(path))
    return path.read_text(encoding="utf-8")


def read_bytes(path: Union[str, Path]) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(str(path))
    return path.read_bytes()


def write_atomic(path: Union[str, Path], text: str) -> None:
    """
    Write text so readers never observe a partial file

    The content goes to a temp file in the target directory and is renamed
    over the destination.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
