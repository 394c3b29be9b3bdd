"""Statistical vocabulary filtering.

Candidate terms are tested for over-representation in the focus corpus
against a background collection (hypergeometric upper tail, Benjamini-
Hochberg step-up at a configurable false discovery rate).  Without a
background, a document-frequency band is applied instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import BackgroundStats, Corpus

# Below this population size, log-binomials come from exact integer
# binomials (math.log on a big int is correctly rounded); above it,
# lgamma is accurate enough and the integers would be impractical.
_EXACT_LOG_COMB_LIMIT = 1000


def _log_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    if n <= _EXACT_LOG_COMB_LIMIT:
        return math.log(math.comb(n, k))
    return (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    )


def _log_pmf(M: int, K: int, m: int, x: int) -> float:
    return _log_comb(K, x) + _log_comb(M - K, m - x) - _log_comb(M, m)


def _pmf_run(M: int, K: int, m: int, start: int, stop: int) -> float:
    """Sum of hypergeometric pmf over x in [start, stop], accumulated in
    linear space from the pmf at ``start`` via exact stepping ratios."""
    if stop < start:
        return 0.0
    log0 = _log_pmf(M, K, m, start)
    x = np.arange(start, stop, dtype=np.float64)
    ratios = ((K - x) * (m - x)) / ((x + 1.0) * (M - K - m + x + 1.0))
    rel = np.concatenate(([1.0], np.cumprod(ratios)))
    total = float(rel.sum())
    return math.exp(log0 + math.log(total))


def hypergeom_sf(M: int, K: int, m: int, k: int) -> float:
    """Upper tail P(X >= k) for X ~ Hypergeometric(M, K, m).

    M is the background size, K the background count of the term, m the
    focus-set size, and k the focus-set count.  Computed in log space;
    the tail is summed directly above the mode and via the complement
    below it, so both regimes stay accurate.
    """
    if not (0 <= k <= m <= M and k <= K <= M):
        raise ValueError(
            f"hypergeometric parameters out of order: "
            f"need 0 <= k <= m <= M and k <= K <= M, got "
            f"M={M}, K={K}, m={m}, k={k}"
        )
    if k == 0:
        return 1.0
    hi = min(m, K)
    if k > hi:
        return 0.0
    lo = max(0, m - (M - K))
    if k <= lo:
        return 1.0
    mode = (m + 1) * (K + 1) // (M + 2)
    if k > mode:
        return min(1.0, _pmf_run(M, K, m, k, hi))
    # Large tail: subtract the short lower run P(X <= k-1) instead.
    return max(0.0, 1.0 - _pmf_run(M, K, m, lo, k - 1))


def bh_filter(p_values: Sequence[float], fdr: float = 0.01) -> set[int]:
    """Benjamini-Hochberg step-up: indices of accepted hypotheses.

    Sort p ascending; find the largest k with p_(k) <= k*fdr/m; accept
    every item with p <= p_(k).  Ties share their fate.
    """
    if not 0.0 < fdr < 1.0:
        raise ValueError(f"fdr must be in (0, 1), got {fdr}")
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return set()
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    sorted_p = np.sort(p)
    passing = np.nonzero(sorted_p <= fdr * np.arange(1, m + 1) / m)[0]
    if passing.size == 0:
        return set()
    critical = sorted_p[passing[-1]]
    return set(np.nonzero(p <= critical)[0].tolist())


@dataclass(frozen=True)
class Vocabulary:
    """The filtered, indexed working vocabulary.

    Terms are sorted lexicographically; ids are dense 0..n-1.  Postings
    hold sorted document indices into the owning corpus's order.
    """

    terms: tuple[str, ...]
    df: np.ndarray
    p_value: np.ndarray | None
    postings: tuple[np.ndarray, ...]
    n_docs: int
    fdr: float | None
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "index", {t: i for i, t in enumerate(self.terms)}
        )

    @property
    def n(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


def build_vocabulary(
    corpus: Corpus,
    background: BackgroundStats | None = None,
    fdr: float = 0.01,
    df_band: tuple[int, float] = (5, 0.5),
) -> Vocabulary:
    """Filter candidate terms and build the indexed vocabulary.

    With a background: per-term hypergeometric p-values (background count
    clamped up to the focus df, so a stale background snapshot cannot
    produce invalid parameters) followed by BH acceptance at ``fdr``.
    Without one: keep terms with df >= min_df and df/n_docs <= max_df_ratio.
    """
    if corpus.n_docs == 0:
        raise ValueError("corpus is empty")
    candidates = sorted(corpus.df)
    dfs = np.array([corpus.df[t] for t in candidates], dtype=np.int64)

    p_by_candidate: np.ndarray | None = None
    if background is not None:
        M = background.universe_size
        m = corpus.n_docs
        if m > M:
            raise ValueError(
                f"focus corpus ({m} docs) larger than background universe ({M})"
            )
        p_by_candidate = np.empty(len(candidates), dtype=np.float64)
        for i, term in enumerate(candidates):
            k = int(dfs[i])
            K = max(background.term_counts.get(term, 0), k)
            p_by_candidate[i] = hypergeom_sf(M, K, m, k)
        accepted = bh_filter(p_by_candidate, fdr=fdr)
        kept = sorted(accepted)
    else:
        min_df, max_df_ratio = df_band
        mask = (dfs >= min_df) & (dfs <= max_df_ratio * corpus.n_docs)
        kept = np.nonzero(mask)[0].tolist()

    if not kept:
        raise ValueError(
            "no term survived vocabulary filtering; relax the filter "
            "(raise fdr, lower min_df, or raise max_df_ratio)"
        )

    terms = tuple(candidates[i] for i in kept)
    term_set = {t: j for j, t in enumerate(terms)}
    posting_lists: list[list[int]] = [[] for _ in terms]
    for doc_idx, doc in enumerate(corpus.documents):
        for term in doc.term_freq:
            j = term_set.get(term)
            if j is not None:
                posting_lists[j].append(doc_idx)
    postings = tuple(
        np.asarray(lst, dtype=np.int32) for lst in posting_lists
    )

    return Vocabulary(
        terms=terms,
        df=dfs[kept],
        p_value=None if p_by_candidate is None else p_by_candidate[kept],
        postings=postings,
        n_docs=corpus.n_docs,
        fdr=fdr if background is not None else None,
    )


def vocabulary_to_dict(vocab: Vocabulary) -> dict:
    return {
        "n_docs": vocab.n_docs,
        "fdr": vocab.fdr,
        "terms": [
            {
                "term": term,
                "df": int(vocab.df[i]),
                "p_value": None if vocab.p_value is None else float(vocab.p_value[i]),
            }
            for i, term in enumerate(vocab.terms)
        ],
    }


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(vocabulary_to_dict(vocab), fh, ensure_ascii=False)
        fh.write("\n")


def rebuild_vocabulary(
    data: Mapping, corpus: Corpus
) -> Vocabulary:
    """Reconstruct a Vocabulary from its JSON export plus the corpus it
    was built from (postings are not serialized; one cheap pass rebuilds
    them)."""
    terms = tuple(rec["term"] for rec in data["terms"])
    term_set = {t: j for j, t in enumerate(terms)}
    posting_lists: list[list[int]] = [[] for _ in terms]
    for doc_idx, doc in enumerate(corpus.documents):
        for term in doc.term_freq:
            j = term_set.get(term)
            if j is not None:
                posting_lists[j].append(doc_idx)
    p_values = [rec["p_value"] for rec in data["terms"]]
    has_p = all(p is not None for p in p_values) and p_values
    return Vocabulary(
        terms=terms,
        df=np.array([rec["df"] for rec in data["terms"]], dtype=np.int64),
        p_value=np.array(p_values, dtype=np.float64) if has_p else None,
        postings=tuple(np.asarray(lst, dtype=np.int32) for lst in posting_lists),
        n_docs=int(data["n_docs"]),
        fdr=data.get("fdr"),
    )


def load_vocabulary(path: str | Path, corpus: Corpus) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        return rebuild_vocabulary(json.load(fh), corpus)
