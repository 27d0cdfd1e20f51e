"""Small shared helpers: error base class, text-source reading, atomic writes."""

from __future__ import annotations

import os
from pathlib import Path
from typing import IO, Union

TextSource = Union[str, os.PathLike, IO[str], IO[bytes]]


class DataError(ValueError):
    """Malformed input data (lexicon, corpus, run, qrels, config, index file)."""


def read_text(source: TextSource) -> str:
    """Return the full UTF-8 text of a path or file-like object."""
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            return data.decode("utf-8")
        return data
    return Path(source).read_text(encoding="utf-8")


def atomic_write_bytes(path: Union[str, os.PathLike], data: bytes) -> None:
    """Write via a sibling temp file and rename, so partial files never land."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def atomic_write_text(path: Union[str, os.PathLike], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
