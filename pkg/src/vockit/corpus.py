"""Corpus ingestion and segmentation.

Reads review files (JSON Lines) and interview transcripts (plain text with
optional "SPEAKER:" turn prefixes), segments them into verbatims, applies
ingested informativeness labels, and round-trips verbatims through a
bit-stable JSON Lines export.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .jsonlio import read_records, write_records

REVIEW = "review"
TRANSCRIPT = "transcript"
DOCUMENT_KINDS = (REVIEW, TRANSCRIPT)

LABEL_VERBATIM = "verbatim"
LABEL_INFORMATIVE = "informative"
LABEL_UNINFORMATIVE = "uninformative"
LABEL_UNLABELED = "unlabeled"
VERBATIM_LABELS = (LABEL_VERBATIM, LABEL_INFORMATIVE, LABEL_UNINFORMATIVE, LABEL_UNLABELED)

# Tokens ending in "." that do not terminate a sentence even when followed
# by whitespace and an uppercase letter. Matched casefolded.
ABBREVIATIONS = frozenset({
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.",
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "no.", "dept.",
    "qt.", "qts.", "oz.", "gal.", "lb.", "lbs.", "ft.", "sq.", "pt.", "pts.",
    "inc.", "co.", "corp.", "ltd.", "u.s.",
})

_TERMINATORS = ".!?"
_OPENING_QUOTES = "\"'“‘"

# A speaker turn starts a line with an uppercase-initial label of at most
# two words and a colon, e.g. "Q:", "A:", "INTERVIEWER:", "Mr. Smith:".
# Longer pre-colon phrases ("It was great: ...") are content, not turns.
_TURN_RE = re.compile(r"^([A-Z][A-Za-z0-9.'_-]{0,19}(?: [A-Za-z0-9.'_-]{1,19})?):\s*(.*)$")


class IngestError(ValueError):
    """Raised when an input file cannot be ingested as a whole."""


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    kind: str
    category: str
    text: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in DOCUMENT_KINDS:
            raise ValueError(f"unknown document kind: {self.kind!r}")
        if not self.category:
            raise ValueError("category must be non-empty")


@dataclass(frozen=True)
class Verbatim:
    verbatim_id: str
    doc_id: str
    ordinal: int
    text: str
    category: str
    label: str = LABEL_UNLABELED

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("verbatim text must be non-empty")
        if self.label not in VERBATIM_LABELS:
            raise ValueError(f"unknown label: {self.label!r}")


def ingest_documents(path: str | Path, kind: str, category: str | None = None) -> list[SourceDocument]:
    """Read review or transcript files under `path` into documents.

    `path` may be a single file or a directory; directories are read in
    filename order so ingestion is deterministic. Review files are JSON
    Lines with one {"id", "text", "category", optional "metadata"} object
    per review; transcripts are plain-text files, one document per file.
    Any malformed record aborts the whole ingest (no partial result).
    """
    if kind not in DOCUMENT_KINDS:
        raise IngestError(f"unknown document kind: {kind!r}")
    path = Path(path)
    if not path.exists():
        raise IngestError(f"path does not exist: {path}")
    files = sorted(p for p in path.iterdir() if p.is_file()) if path.is_dir() else [path]

    documents: list[SourceDocument] = []
    seen_ids: set[str] = set()
    for file in files:
        if kind == REVIEW:
            records = _read_review_file(file, category)
        else:
            records = _read_transcript_file(file, category)
        for doc in records:
            if doc.doc_id in seen_ids:
                raise IngestError(f"{file.name}: duplicate document id {doc.doc_id!r}")
            seen_ids.add(doc.doc_id)
            documents.append(doc)
    if not documents:
        raise IngestError(f"no records found under {path}")
    return documents


def _read_review_file(file: Path, default_category: str | None) -> list[SourceDocument]:
    docs = []
    try:
        rows = list(read_records(file))
    except (OSError, ValueError) as exc:
        raise IngestError(str(exc)) from exc
    for index, (lineno, record) in enumerate(rows):
        for key in ("id", "text"):
            if not isinstance(record.get(key), str) or not record[key].strip():
                raise IngestError(f"{file.name}:{lineno}: missing or empty {key!r}")
        cat = record.get("category", default_category)
        if not cat:
            raise IngestError(f"{file.name}:{lineno}: no category in record and no default given")
        metadata = {str(k): str(v) for k, v in record.get("metadata", {}).items()}
        metadata["source_file"] = file.name
        metadata["record_index"] = str(index)
        docs.append(SourceDocument(record["id"], REVIEW, cat, record["text"], metadata))
    return docs


def _read_transcript_file(file: Path, category: str | None) -> list[SourceDocument]:
    if not category:
        raise IngestError("transcript ingestion requires a category")
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {file}: {exc}") from exc
    if not text.strip():
        return []
    metadata = {"source_file": file.name, "record_index": "0"}
    return [SourceDocument(file.stem, TRANSCRIPT, category, text, metadata)]


def split_sentences(text: str) -> list[str]:
    """Deterministic rule-based sentence split.

    A run of {. ! ?} ends a sentence when followed by whitespace and an
    uppercase letter or opening quote (or end of text), unless the token
    ending at the "." is a known abbreviation. Trailing unterminated text
    becomes a final sentence.
    """
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _TERMINATORS:
            j = i + 1
            while j < n and text[j] in _TERMINATORS:
                j += 1
            if _is_boundary(text, i, j):
                piece = text[start:j].strip()
                if piece:
                    sentences.append(piece)
                start = j
            i = j
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _is_boundary(text: str, term_pos: int, after: int) -> bool:
    if after >= len(text):
        return True
    if not text[after].isspace():
        return False
    k = after
    while k < len(text) and text[k].isspace():
        k += 1
    if k >= len(text):
        return True
    nxt = text[k]
    if not (nxt.isupper() or nxt in _OPENING_QUOTES):
        return False
    if text[term_pos] == "." and _token_ending_at(text, term_pos) in ABBREVIATIONS:
        return False
    return True


def _token_ending_at(text: str, term_pos: int) -> str:
    w = term_pos
    while w > 0 and not text[w - 1].isspace():
        w -= 1
    return text[w:term_pos + 1].casefold()


def segment_sentences(doc: SourceDocument) -> list[Verbatim]:
    """Split a review document into one verbatim per sentence."""
    if doc.kind != REVIEW:
        raise ValueError(f"segment_sentences expects a review document, got {doc.kind}")
    return [
        Verbatim(f"{doc.doc_id}:{i}", doc.doc_id, i, sentence, doc.category)
        for i, sentence in enumerate(split_sentences(doc.text))
    ]


def chunk_transcript(doc: SourceDocument, window: int) -> list[Verbatim]:
    """Group transcript sentences into consecutive chunks of at most `window`.

    Chunks never span a speaker-turn boundary; a turn is a line starting
    with a short label and a colon ("Q:", "INTERVIEWER:"). Every sentence
    lands in exactly one chunk.
    """
    if doc.kind != TRANSCRIPT:
        raise ValueError(f"chunk_transcript expects a transcript document, got {doc.kind}")
    if window < 1:
        raise ValueError("window must be >= 1")
    verbatims: list[Verbatim] = []
    ordinal = 0
    for turn_text in _split_turns(doc.text):
        sentences = split_sentences(turn_text)
        for i in range(0, len(sentences), window):
            chunk = " ".join(sentences[i:i + window])
            verbatims.append(Verbatim(f"{doc.doc_id}:{ordinal}", doc.doc_id, ordinal, chunk, doc.category))
            ordinal += 1
    return verbatims


def _split_turns(text: str) -> list[str]:
    turns: list[list[str]] = []
    current: list[str] = []
    for line in text.splitlines():
        match = _TURN_RE.match(line)
        if match:
            if current:
                turns.append(current)
            current = [match.group(2)] if match.group(2) else []
        elif line.strip():
            current.append(line.strip())
    if current:
        turns.append(current)
    return [" ".join(lines) for lines in turns if lines]


def dedup_exact(verbatims: list[Verbatim]) -> list[Verbatim]:
    """Keep the first occurrence of each casefolded, whitespace-normalized text."""
    seen: set[str] = set()
    kept = []
    for v in verbatims:
        key = " ".join(v.text.casefold().split())
        if key not in seen:
            seen.add(key)
            kept.append(v)
    return kept


def load_labels(path: str | Path) -> dict[str, str]:
    """Read a {"verbatim_id", "label"} JSON Lines annotation file."""
    labels: dict[str, str] = {}
    for lineno, record in read_records(path):
        vid = record.get("verbatim_id")
        label = record.get("label")
        if not vid or label not in (LABEL_VERBATIM, LABEL_INFORMATIVE, LABEL_UNINFORMATIVE):
            raise ValueError(f"{Path(path).name}:{lineno}: bad label record {record!r}")
        labels[vid] = label
    return labels


def apply_labels(verbatims: list[Verbatim], labels: dict[str, str]) -> list[Verbatim]:
    """Return verbatims with ingested labels applied; unknown ids are an error."""
    by_id = {v.verbatim_id for v in verbatims}
    unknown = sorted(set(labels) - by_id)
    if unknown:
        raise ValueError(f"labels reference unknown verbatim ids: {unknown[:5]}")
    return [replace(v, label=labels[v.verbatim_id]) if v.verbatim_id in labels else v for v in verbatims]


def write_verbatims(path: str | Path, verbatims: list[Verbatim]) -> None:
    write_records(path, (
        {
            "verbatim_id": v.verbatim_id,
            "doc_id": v.doc_id,
            "ordinal": v.ordinal,
            "text": v.text,
            "category": v.category,
            "label": v.label,
        }
        for v in verbatims
    ))


def read_verbatims(path: str | Path) -> list[Verbatim]:
    """Read a verbatim export; tolerates minimal records with only id/text/category."""
    verbatims = []
    for lineno, record in read_records(path):
        try:
            verbatims.append(Verbatim(
                verbatim_id=record["verbatim_id"],
                doc_id=record.get("doc_id", record["verbatim_id"]),
                ordinal=int(record.get("ordinal", 0)),
                text=record["text"],
                category=record.get("category", ""),
                label=record.get("label", LABEL_UNLABELED),
            ))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{Path(path).name}:{lineno}: bad verbatim record ({exc})") from exc
    return verbatims
