"""Small file helpers: atomic writes and headed CSV tables."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .series import format_value


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_value(v)
    try:
        return format_value(float(v)) if not isinstance(v, str) else v
    except (TypeError, ValueError):
        return str(v)


def csv_text(header, rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def write_csv(path, header, rows) -> None:
    atomic_write(path, csv_text(header, rows))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    header = [h.strip() for h in lines[0].split(",")]
    return header, [ln.split(",") for ln in lines[1:]]
