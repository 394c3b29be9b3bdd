"""Per-topic document scoring and ranking.

A document's score for a topic is the sum over vocabulary terms present in
the document of the term's topic responsibility times a saturating local
term weight.  The local weight formula is a pluggable default: a bounded,
monotone tf weight with optional document-length normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ._parallel import fixed_chunks, map_chunks
from .corpus import Corpus, Document
from .solver import TopicModel
from .vocabulary import Vocabulary


@dataclass(frozen=True)
class LocalWeightConfig:
    """Saturating local term weight: tf / (tf + k * len/avg_len), or
    tf / (tf + k) when length normalization is off."""

    k: float = 1.0
    length_normalize: bool = True
    avg_len: float = 1.0

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("saturation k must be > 0")
        if self.avg_len <= 0.0:
            raise ValueError("avg_len must be > 0")

    @classmethod
    def for_corpus(
        cls, corpus: Corpus, k: float = 1.0, length_normalize: bool = True
    ) -> "LocalWeightConfig":
        avg = corpus.avg_length
        return cls(k=k, length_normalize=length_normalize,
                   avg_len=avg if avg > 0.0 else 1.0)


def local_weight(tf: int, length: int, config: LocalWeightConfig) -> float:
    """Zero for an absent term; strictly increasing in tf; bounded by 1."""
    if tf < 0 or length < tf:
        raise ValueError("need 0 <= tf <= length")
    if tf == 0:
        return 0.0
    if config.length_normalize:
        return tf / (tf + config.k * (length / config.avg_len))
    return tf / (tf + config.k)


def _doc_weights(
    doc: Document, vocab: Vocabulary, config: LocalWeightConfig
) -> tuple[np.ndarray, np.ndarray]:
    """(vocabulary term ids, local weights) for terms present in the doc."""
    ids = []
    weights = []
    for term, tf in doc.term_freq.items():
        j = vocab.index.get(term)
        if j is not None:
            ids.append(j)
            weights.append(local_weight(tf, doc.length, config))
    return np.asarray(ids, dtype=np.int64), np.asarray(weights, dtype=np.float64)


def score_document(
    doc: Document,
    topic: int,
    r: sp.csr_matrix,
    vocab: Vocabulary,
    lw: LocalWeightConfig,
) -> float:
    """Sum of responsibility-weighted local weights over the document's
    vocabulary terms, for one topic column."""
    ids, weights = _doc_weights(doc, vocab, lw)
    if ids.size == 0:
        return 0.0
    col = r.tocsc()[:, topic].toarray().ravel()
    return float(np.dot(weights, col[ids]))


@dataclass(frozen=True)
class DocumentScore:
    """A topic's document ranking: (doc id, score), score descending with
    ascending-id tie-break."""

    topic_id: int
    ranking: tuple[tuple[str, float], ...]


def _weight_matrix(
    corpus: Corpus, vocab: Vocabulary, config: LocalWeightConfig
) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for d, doc in enumerate(corpus.documents):
        ids, weights = _doc_weights(doc, vocab, config)
        rows.append(np.full(ids.size, d, dtype=np.int64))
        cols.append(ids)
        vals.append(weights)
    if rows:
        row = np.concatenate(rows)
        col = np.concatenate(cols)
        val = np.concatenate(vals)
    else:
        row = col = np.empty(0, dtype=np.int64)
        val = np.empty(0, dtype=np.float64)
    return sp.csr_matrix(
        (val, (row, col)), shape=(corpus.n_docs, vocab.n)
    )


def rank_documents(
    corpus: Corpus,
    model: TopicModel,
    vocab: Vocabulary,
    lw: LocalWeightConfig | None = None,
    top_k: int | None = None,
    threads: int | None = None,
) -> list[DocumentScore]:
    """Score and rank every document against every topic.

    Topics come out ordered by exemplar weight (descending, then id),
    matching topic extraction order.
    """
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1")
    if lw is None:
        lw = LocalWeightConfig.for_corpus(corpus)
    weights = _weight_matrix(corpus, vocab, lw)
    scores = (weights @ model.responsibilities).tocsc()

    doc_ids = corpus.doc_ids
    n_docs = corpus.n_docs
    by_id = sorted(range(n_docs), key=lambda d: doc_ids[d])
    id_rank = np.empty(n_docs, dtype=np.int64)
    id_rank[by_id] = np.arange(n_docs)
    topics = sorted(model.exemplars.tolist(), key=lambda j: (-model.q[j], j))

    def rank_topics(chunk: tuple[int, int]) -> list[DocumentScore]:
        out = []
        for t in range(*chunk):
            j = topics[t]
            col = scores[:, j].toarray().ravel()
            order = np.lexsort((id_rank, -col))
            if top_k is not None:
                order = order[:top_k]
            out.append(
                DocumentScore(
                    topic_id=j,
                    ranking=tuple(
                        (doc_ids[d], float(col[d])) for d in order
                    ),
                )
            )
        return out

    parts = map_chunks(rank_topics, fixed_chunks(len(topics), 64), threads)
    return [ds for part in parts for ds in part]


def truncate_rankings(
    rankings: Sequence[DocumentScore], top_k: int
) -> list[DocumentScore]:
    return [
        DocumentScore(topic_id=ds.topic_id, ranking=ds.ranking[:top_k])
        for ds in rankings
    ]


def rankings_to_list(rankings: Sequence[DocumentScore]) -> list:
    return [
        {
            "topic_id": ds.topic_id,
            "ranking": [[doc_id, score] for doc_id, score in ds.ranking],
        }
        for ds in rankings
    ]


def save_rankings(rankings: Sequence[DocumentScore], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rankings_to_list(rankings), fh, ensure_ascii=False)
        fh.write("\n")


def load_rankings(path: str | Path) -> list[DocumentScore]:
    """Read rankings in the exported format; also accepts rankings
    produced by third-party models for evaluation."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    out = []
    for rec in data:
        out.append(
            DocumentScore(
                topic_id=int(rec["topic_id"]),
                ranking=tuple(
                    (str(doc_id), float(score))
                    for doc_id, score in rec["ranking"]
                ),
            )
        )
    return out
