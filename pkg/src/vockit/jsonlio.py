"""Small JSON Lines helpers shared by the file-backed interfaces."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator


def read_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (1-based line number, record) for every non-blank line.

    Raises ValueError naming the file and line on malformed JSON or a
    non-object record, so callers can fail before using any record.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ValueError(f"{path.name}:{lineno}: record is not a JSON object")
            yield lineno, record


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    """Write records one per line, UTF-8, keys in insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
