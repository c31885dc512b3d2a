"""Bit-stable CSV output: 17 significant digits, LF endings, atomic replace."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def format_float(v) -> str:
    v = float(v)
    if v == 0.0:
        return "0"  # folds -0.0 so sign noise on zeros cannot change bytes
    return format(v, ".17g")


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Numbers go through :func:`format_float`; strings and ints are written as is."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int,)) and not isinstance(v, bool):
                cells.append(str(v))
            else:
                cells.append(format_float(v))
        lines.append(",".join(cells))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_columns(path, header: Sequence[str], columns: Sequence) -> Path:
    """Columns of equal length, one CSV row per index."""
    return write_rows(path, header, zip(*columns))
