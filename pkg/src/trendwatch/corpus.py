"""Document ingestion, normalization, segmentation and time slicing.

Raw documents arrive as JSON lines. Long documents are split into paragraph
units (so downstream embedding providers never see over-long inputs) while
keeping a mapping back to the source document, and units are binned into
half-open time slices of a configurable day granularity.
"""
from __future__ import annotations

import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable

from .errors import DataError

log = logging.getLogger(__name__)

# Units with fewer Latin characters than this are dropped: they are almost
# always junk (article endings, bare links, stray punctuation).
MIN_LATIN_CHARS = 100

DEFAULT_MAX_UNIT_CHARS = 2000

_LATIN_RE = re.compile(r"[A-Za-z]")
_PARAGRAPH_SPLIT_RE = re.compile(r"\n\s*\n+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class RawDocument:
    """One source document as ingested."""

    id: str
    timestamp: datetime
    text: str
    source: str | None = None


@dataclass(frozen=True)
class TextUnit:
    """A paragraph-sized fragment carrying its parent document id."""

    unit_id: str
    parent_id: str
    timestamp: datetime
    text: str
    latin_char_count: int


@dataclass(frozen=True)
class Granularity:
    """Slice duration in whole days."""

    days: int

    def __post_init__(self) -> None:
        if self.days < 1:
            raise ValueError(f"granularity must be >= 1 day, got {self.days}")

    @property
    def delta(self) -> timedelta:
        return timedelta(days=self.days)


@dataclass
class DocumentSlice:
    """All text units falling in one half-open interval [start, end)."""

    slice_index: int
    start: datetime
    end: datetime
    units: list[TextUnit] = field(default_factory=list)


@dataclass
class IngestResult:
    documents: list[RawDocument]
    skipped_malformed: int = 0
    skipped_duplicate: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_malformed + self.skipped_duplicate


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if isinstance(value, datetime):
        ts = value
    else:
        raw = str(value).strip()
        if raw.endswith("Z"):
            raw = raw[:-1] + "+00:00"
        ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def ingest(lines: Iterable[str] | IO[str]) -> IngestResult:
    """Parse a JSON-lines stream into documents.

    Malformed lines (bad JSON, missing id/timestamp/text, unparseable
    timestamp) are counted and skipped. A duplicate id keeps the first
    record and drops the later one with a warning.
    """
    result = IngestResult(documents=[])
    seen: set[str] = set()
    try:
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                doc_id = str(obj["id"])
                ts = parse_timestamp(obj["timestamp"])
                text = obj["text"]
                if not isinstance(text, str):
                    raise TypeError("text must be a string")
            except Exception as exc:
                result.skipped_malformed += 1
                log.warning("skipping malformed line %d: %s", lineno, exc)
                continue
            if doc_id in seen:
                result.skipped_duplicate += 1
                log.warning("duplicate document id %r at line %d; keeping first", doc_id, lineno)
                continue
            seen.add(doc_id)
            source = obj.get("source")
            result.documents.append(
                RawDocument(id=doc_id, timestamp=ts, text=text, source=source)
            )
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable input stream: {exc}") from exc
    return result


def latin_char_count(text: str) -> int:
    return len(_LATIN_RE.findall(text))


def _split_long_paragraph(paragraph: str, max_chars: int) -> list[str]:
    """Split an over-long paragraph at sentence boundaries.

    Sentences are greedily packed up to max_chars. A single sentence longer
    than max_chars is kept whole rather than cut mid-sentence.
    """
    sentences = _SENTENCE_SPLIT_RE.split(paragraph)
    pieces: list[str] = []
    current = ""
    for sent in sentences:
        if not current:
            current = sent
        elif len(current) + 1 + len(sent) <= max_chars:
            current = current + " " + sent
        else:
            pieces.append(current)
            current = sent
    if current:
        pieces.append(current)
    return pieces


def preprocess(doc: RawDocument, max_unit_chars: int = DEFAULT_MAX_UNIT_CHARS) -> list[TextUnit]:
    """Normalize and segment one document into filtered text units.

    Text is NFC-normalized, split into paragraphs on blank lines, and
    paragraphs longer than max_unit_chars are further split at sentence
    boundaries. Units with fewer than MIN_LATIN_CHARS Latin characters
    are dropped; the threshold applies to each final unit.
    """
    normalized = unicodedata.normalize("NFC", doc.text)
    paragraphs = [p.strip() for p in _PARAGRAPH_SPLIT_RE.split(normalized)]
    units: list[TextUnit] = []
    counter = 0
    for para in paragraphs:
        if not para:
            continue
        pieces = [para] if len(para) <= max_unit_chars else _split_long_paragraph(para, max_unit_chars)
        for piece in pieces:
            piece = piece.strip()
            n_latin = latin_char_count(piece)
            if n_latin < MIN_LATIN_CHARS:
                continue
            units.append(
                TextUnit(
                    unit_id=f"{doc.id}:{counter}",
                    parent_id=doc.id,
                    timestamp=doc.timestamp,
                    text=piece,
                    latin_char_count=n_latin,
                )
            )
            counter += 1
    return units


def slice_units(
    units: list[TextUnit],
    granularity: Granularity,
    start: datetime,
    end: datetime,
) -> list[DocumentSlice]:
    """Bin units into contiguous half-open slices covering [start, end).

    Empty slices are retained so downstream popularity decay still advances.
    Units timestamped outside [start, end) are dropped. A unit exactly on a
    boundary belongs to the later slice.
    """
    if start >= end:
        raise ValueError("start must be before end")
    start = start.astimezone(timezone.utc)
    end = end.astimezone(timezone.utc)
    span = end - start
    n_slices = -(-span // granularity.delta)  # ceil division
    slices = [
        DocumentSlice(
            slice_index=i,
            start=start + i * granularity.delta,
            end=start + (i + 1) * granularity.delta,
        )
        for i in range(n_slices)
    ]
    dropped = 0
    for unit in units:
        ts = unit.timestamp
        if ts < start or ts >= end:
            dropped += 1
            continue
        idx = (ts - start) // granularity.delta
        slices[idx].units.append(unit)
    if dropped:
        log.info("dropped %d units outside [%s, %s)", dropped, start, end)
    return slices
