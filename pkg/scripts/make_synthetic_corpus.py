#!/usr/bin/env python3
"""Generate a synthetic labeled benchmark corpus as JSONL.

Documents are drawn from planted term clusters: every document samples
its tokens from one cluster's term distribution (a few heavy hub terms
plus a light tail), then a handful of corpus-wide noise terms that are
frequent enough to be dropped by the max-df filter.  Cluster ids double
as document labels, so the full pipeline including evaluation runs on
the output.

Defaults produce 10,000 documents over 100 clusters of 30 terms
(3,000 vocabulary terms once noise is filtered).  Intended config:
max_phrase_len=1, min_df=5, max_df_ratio=0.5.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def generate(
    out_path: Path,
    n_docs: int = 10_000,
    n_clusters: int = 100,
    terms_per_cluster: int = 30,
    n_hubs: int = 3,
    doc_len: int = 60,
    n_noise_terms: int = 30,
    noise_prob: float = 0.7,
    seed: int = 0,
) -> dict:
    rng = np.random.default_rng(seed)
    cluster_terms = [
        [f"c{c:03d}t{t:02d}" for t in range(terms_per_cluster)]
        for c in range(n_clusters)
    ]
    noise_terms = [f"noise{i:03d}" for i in range(n_noise_terms)]

    # Hub terms dominate within a cluster so exemplar weight concentrates.
    weights = np.ones(terms_per_cluster)
    weights[:n_hubs] = 12.0
    weights /= weights.sum()

    with open(out_path, "w", encoding="utf-8") as fh:
        for d in range(n_docs):
            c = d % n_clusters
            terms = cluster_terms[c]
            picks = rng.choice(terms_per_cluster, size=doc_len, p=weights)
            tokens = [terms[i] for i in picks]
            tokens.extend(
                t for t in noise_terms if rng.random() < noise_prob
            )
            rng.shuffle(tokens)
            fh.write(json.dumps({
                "id": f"doc{d:06d}",
                "text": " ".join(tokens),
                "labels": [f"cluster{c:03d}"],
            }))
            fh.write("\n")
    return {
        "n_docs": n_docs,
        "n_cluster_terms": n_clusters * terms_per_cluster,
        "n_noise_terms": n_noise_terms,
        "out": str(out_path),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--docs", type=int, default=10_000)
    parser.add_argument("--clusters", type=int, default=100)
    parser.add_argument("--terms-per-cluster", type=int, default=30)
    parser.add_argument("--hubs", type=int, default=3)
    parser.add_argument("--doc-len", type=int, default=60)
    parser.add_argument("--noise-terms", type=int, default=30)
    parser.add_argument("--noise-prob", type=float, default=0.7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    info = generate(
        out_path=args.out,
        n_docs=args.docs,
        n_clusters=args.clusters,
        terms_per_cluster=args.terms_per_cluster,
        n_hubs=args.hubs,
        doc_len=args.doc_len,
        n_noise_terms=args.noise_terms,
        noise_prob=args.noise_prob,
        seed=args.seed,
    )
    print(json.dumps(info))
    return 0


if __name__ == "__main__":
    sys.exit(main())
