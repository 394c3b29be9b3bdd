"""Corpus loading, tokenization, and candidate-term extraction.

Documents are normalized into segments: maximal runs of kept tokens between
boundaries (stopwords, single characters, purely numeric tokens, punctuation).
Candidate terms are the kept single tokens plus contiguous n-grams within a
segment, so no phrase ever crosses a boundary.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .stopwords import ENGLISH_STOPWORDS

DEFAULT_MAX_PHRASE_LEN = 3

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusFormatError(ValueError):
    """Malformed corpus or background input."""


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Bundled English stopword list, or one word per line from ``path``."""
    if path is None:
        return ENGLISH_STOPWORDS
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)


def _segments(text: str, stopwords: frozenset[str]) -> list[tuple[str, ...]]:
    """Split into runs of kept tokens; every dropped token is a boundary."""
    segments: list[tuple[str, ...]] = []
    run: list[str] = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) == 1 or tok.isdigit() or tok in stopwords:
            if run:
                segments.append(tuple(run))
                run = []
            continue
        run.append(tok)
    if run:
        segments.append(tuple(run))
    return segments


def tokenize(text: str, stopwords: frozenset[str] = ENGLISH_STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumerics (hyphens split), drop
    single-character tokens, purely numeric tokens, and stopwords."""
    return [tok for seg in _segments(text, stopwords) for tok in seg]


def _candidate_counts(
    segments: Iterable[tuple[str, ...]], max_phrase_len: int
) -> Counter:
    """Occurrence counts of single tokens and within-segment n-grams."""
    if max_phrase_len < 1:
        raise ValueError("max_phrase_len must be >= 1")
    counts: Counter = Counter()
    for seg in segments:
        counts.update(seg)
        for n in range(2, max_phrase_len + 1):
            for start in range(len(seg) - n + 1):
                counts[" ".join(seg[start : start + n])] += 1
    return counts


@dataclass(frozen=True)
class Document:
    """A tokenized document with label sets and candidate-term counts.

    ``term_freq`` counts every candidate term (single tokens and phrases);
    ``length`` is the kept single-token count, i.e. the sum of ``term_freq``
    over non-phrase keys.
    """

    id: str
    title: str
    body: str
    labels: frozenset[str]
    segments: tuple[tuple[str, ...], ...]
    term_freq: Mapping[str, int]
    length: int

    @property
    def tokens(self) -> list[str]:
        return [tok for seg in self.segments for tok in seg]

    @property
    def candidates(self) -> Iterable[str]:
        """Distinct candidate terms (keys of ``term_freq``)."""
        return self.term_freq.keys()

    @classmethod
    def from_text(
        cls,
        id: str,
        title: str = "",
        body: str = "",
        labels: Iterable[str] = (),
        stopwords: frozenset[str] = ENGLISH_STOPWORDS,
        max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
    ) -> "Document":
        # Title and body are concatenated before tokenization.
        text = f"{title}\n{body}" if title else body
        segments = tuple(_segments(text, stopwords))
        term_freq = dict(_candidate_counts(segments, max_phrase_len))
        length = sum(len(seg) for seg in segments)
        return cls(
            id=id,
            title=title,
            body=body,
            labels=frozenset(labels),
            segments=segments,
            term_freq=term_freq,
            length=length,
        )

    @classmethod
    def from_segments(
        cls,
        id: str,
        segments: Iterable[Iterable[str]],
        labels: Iterable[str] = (),
        max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
    ) -> "Document":
        segs = tuple(tuple(seg) for seg in segments)
        term_freq = dict(_candidate_counts(segs, max_phrase_len))
        return cls(
            id=id,
            title="",
            body="",
            labels=frozenset(labels),
            segments=segs,
            term_freq=term_freq,
            length=sum(len(seg) for seg in segs),
        )


def extract_candidates(
    document: Document, max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN
) -> set[str]:
    """All single kept tokens plus contiguous n-grams (2..max_phrase_len)
    that do not cross a boundary in the original token stream."""
    return set(_candidate_counts(document.segments, max_phrase_len))


class Corpus:
    """An immutable, ordered collection of documents with unique ids.

    ``df`` maps every candidate term to the number of documents whose
    candidate set contains it.
    """

    def __init__(self, documents: Iterable[Document]):
        self.documents: tuple[Document, ...] = tuple(documents)
        self.index: dict[str, int] = {}
        for i, doc in enumerate(self.documents):
            if doc.id in self.index:
                raise CorpusFormatError(f"duplicate document id {doc.id!r}")
            self.index[doc.id] = i
        df: Counter = Counter()
        for doc in self.documents:
            df.update(doc.term_freq.keys())
        self.df: dict[str, int] = dict(df)

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def doc_ids(self) -> list[str]:
        return [doc.id for doc in self.documents]

    @property
    def avg_length(self) -> float:
        if not self.documents:
            return 0.0
        return sum(doc.length for doc in self.documents) / len(self.documents)

    def labels(self) -> set[str]:
        out: set[str] = set()
        for doc in self.documents:
            out.update(doc.labels)
        return out

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, key: int | str) -> Document:
        if isinstance(key, str):
            return self.documents[self.index[key]]
        return self.documents[key]

    def with_permuted_labels(self, seed: int) -> "Corpus":
        """Copy of the corpus with label sets permuted among documents.

        Used as a null control: label/document association is destroyed
        while per-label positive counts are preserved exactly.
        """
        import random

        rng = random.Random(seed)
        label_sets = [doc.labels for doc in self.documents]
        rng.shuffle(label_sets)
        return Corpus(
            replace(doc, labels=labels)
            for doc, labels in zip(self.documents, label_sets)
        )


def load_jsonl_corpus(
    path: str | Path,
    stopwords: frozenset[str] = ENGLISH_STOPWORDS,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> Corpus:
    """One JSON object per line: ``id`` (required), ``title``, ``text``,
    ``labels`` (optional array of strings)."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: invalid JSON ({exc.msg})"
                ) from exc
            if not isinstance(record, dict) or "id" not in record:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: record has no 'id' field"
                )
            doc_id = record["id"]
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: 'id' must be a non-empty string"
                )
            labels = record.get("labels", [])
            if not isinstance(labels, list) or not all(
                isinstance(x, str) for x in labels
            ):
                raise CorpusFormatError(
                    f"{path}: line {lineno}: 'labels' must be an array of strings"
                )
            docs.append(
                Document.from_text(
                    id=doc_id,
                    title=record.get("title", "") or "",
                    body=record.get("text", "") or "",
                    labels=labels,
                    stopwords=stopwords,
                    max_phrase_len=max_phrase_len,
                )
            )
    return Corpus(docs)


def load_twenty_news_corpus(
    path: str | Path,
    stopwords: frozenset[str] = ENGLISH_STOPWORDS,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> Corpus:
    """Standard extracted layout: one subdirectory per newsgroup containing
    one file per post.  The group name becomes the document's single label;
    ids are ``group/filename``."""
    root = Path(path)
    if not root.is_dir():
        raise CorpusFormatError(f"{path}: not a directory")
    groups = sorted(p for p in root.iterdir() if p.is_dir())
    if not groups:
        raise CorpusFormatError(f"{path}: no newsgroup subdirectories found")
    docs = []
    for group in groups:
        for post in sorted(p for p in group.iterdir() if p.is_file()):
            # Usenet archives are not valid UTF-8; latin-1 accepts any byte.
            body = post.read_text(encoding="latin-1")
            docs.append(
                Document.from_text(
                    id=f"{group.name}/{post.name}",
                    body=body,
                    labels=[group.name],
                    stopwords=stopwords,
                    max_phrase_len=max_phrase_len,
                )
            )
    return Corpus(docs)


def load_corpus(
    path: str | Path,
    format: str = "jsonl",
    stopwords: frozenset[str] = ENGLISH_STOPWORDS,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> Corpus:
    if format == "jsonl":
        return load_jsonl_corpus(path, stopwords, max_phrase_len)
    if format == "twenty_news_dir":
        return load_twenty_news_corpus(path, stopwords, max_phrase_len)
    raise ValueError(f"unknown corpus format {format!r}")


@dataclass(frozen=True)
class BackgroundStats:
    """Document counts of terms in a large background collection."""

    universe_size: int
    term_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.universe_size < 0:
            raise ValueError("universe_size must be non-negative")
        for term, count in self.term_counts.items():
            if not 0 <= count <= self.universe_size:
                raise CorpusFormatError(
                    f"background count for {term!r} outside [0, universe_size]"
                )

    def excess_terms(self, corpus: Corpus) -> list[str]:
        """Terms whose focus-set df exceeds the recorded background count.

        Non-empty output means the focus corpus is not a literal subset of
        the background snapshot; counts are clamped during p-value
        computation, so this is diagnostic, not fatal.
        """
        return sorted(
            t
            for t, df in corpus.df.items()
            if t in self.term_counts and df > self.term_counts[t]
        )


def load_background(path: str | Path) -> BackgroundStats:
    """TSV with a ``#universe<TAB>M`` header followed by
    ``term<TAB>count`` lines."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split("\t")
        if len(parts) != 2 or parts[0] != "#universe":
            raise CorpusFormatError(
                f"{path}: first line must be '#universe<TAB>M', got {header!r}"
            )
        try:
            universe = int(parts[1])
        except ValueError as exc:
            raise CorpusFormatError(
                f"{path}: universe size {parts[1]!r} is not an integer"
            ) from exc
        counts: dict[str, int] = {}
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: expected 'term<TAB>count'"
                )
            term, raw = fields
            if term in counts:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: duplicate term {term!r}"
                )
            try:
                counts[term] = int(raw)
            except ValueError as exc:
                raise CorpusFormatError(
                    f"{path}: line {lineno}: count {raw!r} is not an integer"
                ) from exc
    return BackgroundStats(universe_size=universe, term_counts=counts)
