"""Shared test fixtures: independent oracles and instance generators.

Oracles use exact rational arithmetic (fractions) or direct definitional
enumeration, never the library's floating-point code paths.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np
import scipy.sparse as sp

from extopics import SparseSimilarity
from extopics.corpus import Corpus, Document


# ---------------------------------------------------------------- oracles

def exact_hypergeom_sf(M: int, K: int, m: int, k: int) -> Fraction:
    """P(X >= k) as an exact rational via full tail enumeration."""
    total = comb(M, m)
    upper = sum(
        comb(K, x) * comb(M - K, m - x)
        for x in range(k, min(m, K) + 1)
        if m - x <= M - K
    )
    return Fraction(upper, total)


def bh_oracle(p_values, fdr) -> set[int]:
    """Direct step-up definition, scanning k from the top."""
    m = len(p_values)
    ordered = sorted(p_values)
    for k in range(m, 0, -1):
        if ordered[k - 1] <= Fraction(k, m) * Fraction(fdr):
            critical = ordered[k - 1]
            return {i for i, p in enumerate(p_values) if p <= critical}
    return set()


def dice_oracle(df_i: int, df_j: int, codf: int) -> Fraction:
    return Fraction(2 * codf, df_i + df_j)


def ap_oracle(ranking, positives) -> Fraction:
    """Exact average precision over the full ranking."""
    pos = set(positives)
    hits = 0
    total = Fraction(0)
    for rank, doc in enumerate(ranking, 1):
        if doc in pos:
            hits += 1
            total += Fraction(hits, rank)
    return total / len(pos)


def maxmap_oracle(rankings, label_positives, top_n):
    """Brute force over the full (label, topic) grid with exact APs.

    rankings: list of (topic_id, [doc ids]); label_positives: dict
    label -> set of doc ids.  Returns (maxmap, {label: (best_topic, ap)}).
    """
    best = {}
    for label, positives in label_positives.items():
        scored = []
        for topic_id, ranking in rankings:
            scored.append((ap_oracle(ranking, positives), -topic_id))
        ap, neg_topic = max(scored)
        best[label] = (-neg_topic, ap)
    top = sorted(best.values(), key=lambda pair: (-pair[1], pair[0]))
    used = [ap for _topic, ap in top[: min(top_n, len(top))]]
    return sum(used) / len(used), best


def simplex_grid_max(s: SparseSimilarity, step: float = 0.005) -> float:
    """Exhaustive simplex grid search of the mean log mixture mass."""
    n = s.n
    if n == 1:
        return 0.0
    units = round(1.0 / step)
    axes = [np.arange(units + 1, dtype=np.int16)] * (n - 1)
    grids = np.meshgrid(*axes, indexing="ij")
    parts = np.stack([g.ravel() for g in grids], axis=1)
    remainder = (units - parts.sum(axis=1, dtype=np.int32)).astype(np.int32)
    valid = remainder >= 0
    points = (
        np.column_stack([parts[valid].astype(np.int32), remainder[valid]])
        * step
    )
    dense = s.toarray()
    z = points @ dense.T
    with np.errstate(divide="ignore"):
        values = np.where(
            np.all(z > 0.0, axis=1),
            np.mean(np.log(np.maximum(z, 1e-300)), axis=1),
            -np.inf,
        )
    return float(values.max())


# ----------------------------------------------------- instance generators

def random_similarity(n: int, density: float, rng) -> SparseSimilarity:
    """Random sparse symmetric matrix, unit diagonal, values in [0.05, 1]."""
    m = sp.random(
        n, n, density=density / 2, random_state=rng,
        data_rvs=lambda k: rng.uniform(0.05, 1.0, k),
    )
    m = sp.triu(m, k=1)
    m = m + m.T + sp.identity(n)
    m = m.tocsr()
    m.sort_indices()
    return SparseSimilarity(matrix=m, cutoff=0.05)


def planted_similarity(seed: int) -> SparseSimilarity:
    """Heterogeneous diagonal blocks plus a few weak cross links; these
    instances have well-separated optima (verified offline), so support
    recovery is well-posed."""
    rng = np.random.default_rng(seed)
    n_blocks = int(rng.integers(3, 9))
    sizes = rng.integers(2, 8, n_blocks)
    n = int(sizes.sum())
    a = np.zeros((n, n))
    start = 0
    for sz in sizes:
        blk = rng.uniform(0.4, 1.0, (sz, sz))
        blk = (blk + blk.T) / 2
        a[start : start + sz, start : start + sz] = blk
        start += sz
    for _ in range(int(rng.integers(0, 6))):
        i, j = rng.integers(0, n, 2)
        if i != j:
            v = rng.uniform(0.05, 0.15)
            a[i, j] = a[j, i] = v
    np.fill_diagonal(a, 1.0)
    return SparseSimilarity.from_dense(a, cutoff=0.05)


def corpus_from_token_docs(docs: dict[str, list[str]], labels=None,
                           max_phrase_len: int = 1) -> Corpus:
    """Corpus from {doc id: token list}; tokens are taken as-is."""
    labels = labels or {}
    return Corpus(
        Document.from_segments(
            id=doc_id,
            segments=[tokens],
            labels=labels.get(doc_id, ()),
            max_phrase_len=max_phrase_len,
        )
        for doc_id, tokens in docs.items()
    )


def random_token_corpus(rng, n_docs: int, alphabet_size: int = 12,
                        doc_len: tuple[int, int] = (1, 10)) -> Corpus:
    terms = [f"w{i:02d}" for i in range(alphabet_size)]
    docs = {}
    for d in range(n_docs):
        length = int(rng.integers(*doc_len))
        docs[f"d{d:03d}"] = [terms[i] for i in rng.integers(0, alphabet_size, length)]
    return corpus_from_token_docs(docs)
