"""Label-alignment evaluation of topic document rankings.

For each qualified label, the best Average Precision over all topic
rankings is found; the mean of the top-N best APs is the headline
alignment score.  Labels qualify the same way vocabulary terms do:
hypergeometric + BH against a background when one exists, or a minimum
positive-document count otherwise.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Sequence

import numpy as np

from ._parallel import fixed_chunks, map_chunks
from .corpus import BackgroundStats, Corpus
from .scoring import DocumentScore
from .solver import TopicModel
from .vocabulary import bh_filter, hypergeom_sf

# Rankings beyond this many topics are restricted to the heaviest
# exemplars before evaluation.
MAX_TOPICS_EVALUATED = 1000


@dataclass(frozen=True)
class EvalConfig:
    """top_n: how many best-AP labels are averaged (None = all, capped at
    MAX_TOPICS_EVALUATED); min_positives applies when no background is
    given; fdr applies when one is."""

    top_n: int | None = None
    min_positives: int = 5
    fdr: float = 0.01

    def __post_init__(self):
        if self.top_n is not None and self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.min_positives < 1:
            raise ValueError("min_positives must be >= 1")


def average_precision(
    ranking: Sequence[str], positives: Collection[str]
) -> float:
    """Mean of precision at each positive's rank, over the full ranking."""
    pos = set(positives)
    if not pos:
        raise ValueError("label has no positive documents")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranking, 1):
        if doc_id in pos:
            hits += 1
            total += hits / rank
    if hits != len(pos):
        raise ValueError(
            f"{len(pos) - hits} positive document(s) missing from the ranking"
        )
    return total / len(pos)


def _ap_from_positions(positions: np.ndarray) -> float:
    """AP from the sorted 0-based ranks of the positive documents."""
    ranks = np.sort(positions) + 1.0
    return float(np.mean(np.arange(1, ranks.size + 1) / ranks))


def qualified_labels(
    corpus: Corpus,
    background: BackgroundStats | None = None,
    config: EvalConfig = EvalConfig(),
) -> set[str]:
    """Labels eligible for evaluation.

    With a background: hypergeometric p-values over label document
    frequencies with BH acceptance at config.fdr (background counts
    clamped up to the observed df).  Without: labels appearing on at
    least config.min_positives documents.
    """
    label_df: Counter = Counter()
    for doc in corpus.documents:
        label_df.update(doc.labels)
    if not label_df:
        raise ValueError("corpus has no labels")
    labels = sorted(label_df)
    if background is not None:
        M = background.universe_size
        m = corpus.n_docs
        p_values = []
        for label in labels:
            k = label_df[label]
            K = max(background.term_counts.get(label, 0), k)
            p_values.append(hypergeom_sf(M, K, m, k))
        accepted = bh_filter(p_values, fdr=config.fdr)
        qualified = {labels[i] for i in accepted}
    else:
        qualified = {
            label for label in labels if label_df[label] >= config.min_positives
        }
    if not qualified:
        raise ValueError(
            "no label qualified for evaluation; lower min_positives or "
            "relax the background filter"
        )
    return qualified


@dataclass(frozen=True)
class LabelResult:
    label: str
    best_topic_id: int
    ap: float


@dataclass(frozen=True)
class EvalReport:
    """Per-label best APs (descending) and their top-N mean."""

    labels: tuple[LabelResult, ...]
    maxmap: float
    n_labels_qualified: int
    n_used: int


def _select_topics(
    rankings: Sequence[DocumentScore], model: TopicModel | None
) -> list[DocumentScore]:
    if len(rankings) <= MAX_TOPICS_EVALUATED:
        return list(rankings)
    if model is None:
        # External rankings carry no exemplar weights; take them as given.
        return list(rankings)[:MAX_TOPICS_EVALUATED]
    by_weight = sorted(
        rankings, key=lambda ds: (-model.q[ds.topic_id], ds.topic_id)
    )
    return by_weight[:MAX_TOPICS_EVALUATED]


def maxmap(
    corpus: Corpus,
    model: TopicModel | None,
    rankings: Sequence[DocumentScore],
    config: EvalConfig = EvalConfig(),
    background: BackgroundStats | None = None,
    threads: int | None = None,
) -> EvalReport:
    """Best AP per qualified label, averaged over the top-N labels.

    Rankings must cover the whole corpus (no truncation).  Ties in the
    best topic go to the lowest topic id; label order in the report is
    AP descending, then label ascending.
    """
    if not rankings:
        raise ValueError("no topic rankings supplied")
    topics = _select_topics(rankings, model)

    doc_pos = corpus.index
    n_docs = corpus.n_docs
    positions = []
    for ds in topics:
        if len(ds.ranking) != n_docs:
            raise ValueError(
                f"topic {ds.topic_id}: ranking covers {len(ds.ranking)} of "
                f"{n_docs} documents; evaluation needs untruncated rankings"
            )
        pos_of_doc = np.empty(n_docs, dtype=np.int64)
        seen = np.zeros(n_docs, dtype=bool)
        for rank, (doc_id, _score) in enumerate(ds.ranking):
            try:
                d = doc_pos[doc_id]
            except KeyError:
                raise ValueError(
                    f"topic {ds.topic_id}: unknown document id {doc_id!r}"
                ) from None
            if seen[d]:
                raise ValueError(
                    f"topic {ds.topic_id}: duplicate document id {doc_id!r}"
                )
            seen[d] = True
            pos_of_doc[d] = rank
        positions.append(pos_of_doc)

    labels = sorted(qualified_labels(corpus, background, config))
    members: dict[str, list[int]] = {label: [] for label in labels}
    for d, doc in enumerate(corpus.documents):
        for label in doc.labels:
            if label in members:
                members[label].append(d)

    def best_for(chunk: tuple[int, int]) -> list[LabelResult]:
        out = []
        for li in range(*chunk):
            label = labels[li]
            d_idx = np.asarray(members[label], dtype=np.int64)
            best_ap = -1.0
            best_topic = -1
            for ds, pos_of_doc in zip(topics, positions):
                ap = _ap_from_positions(pos_of_doc[d_idx])
                if ap > best_ap or (ap == best_ap and ds.topic_id < best_topic):
                    best_ap = ap
                    best_topic = ds.topic_id
            out.append(LabelResult(label=label, best_topic_id=best_topic, ap=best_ap))
        return out

    parts = map_chunks(best_for, fixed_chunks(len(labels), 16), threads)
    results = sorted(
        (r for part in parts for r in part), key=lambda r: (-r.ap, r.label)
    )

    n_qualified = len(results)
    top_n = config.top_n
    if top_n is None:
        top_n = min(MAX_TOPICS_EVALUATED, len(topics))
    n_used = min(top_n, n_qualified)
    score = float(np.mean([r.ap for r in results[:n_used]]))
    return EvalReport(
        labels=tuple(results),
        maxmap=score,
        n_labels_qualified=n_qualified,
        n_used=n_used,
    )


def report_to_dict(report: EvalReport) -> dict:
    return {
        "maxmap": report.maxmap,
        "n_used": report.n_used,
        "labels": [
            {"label": r.label, "best_topic": r.best_topic_id, "ap": r.ap}
            for r in report.labels
        ],
    }


def save_report(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, ensure_ascii=False)
        fh.write("\n")


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    labels = tuple(
        LabelResult(
            label=rec["label"],
            best_topic_id=int(rec["best_topic"]),
            ap=float(rec["ap"]),
        )
        for rec in data["labels"]
    )
    return EvalReport(
        labels=labels,
        maxmap=float(data["maxmap"]),
        n_labels_qualified=len(labels),
        n_used=int(data["n_used"]),
    )
