"""Globally convergent exemplar-weight fitting over a sparse similarity.

The objective is the mean log mixture mass

    L(q) = (1/n) * sum_i log( sum_j s_ij * q_j )

maximized over the probability simplex.  Restricting sources to the data
points themselves makes this problem convex, so the multiplicative update

    z_i = sum_j s_ij q_j,   eta_j = (1/n) * sum_i s_ij / z_i,
    q_j <- eta_j * q_j

increases L monotonically and converges to the global optimum from any
strictly positive start.  Coordinates that decay below a relative
threshold are pruned to exact zero each iteration; the surviving support
is the topic set, discovered by the optimization itself rather than
chosen in advance.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ._parallel import fixed_chunks, resolve_threads
from .similarity import SparseSimilarity

_CHUNK_ROWS = 2048
_SUM_TOL = 1e-12


class DisconnectedSupportError(RuntimeError):
    """Some term has zero mixture mass: its whole similarity neighborhood
    was pruned away.  Signals over-aggressive pruning."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    patience: int = 3
    max_iter: int = 10_000
    prune_eps: float = 1e-6
    threads: int | None = None

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be > 0")
        if not 0.0 < self.prune_eps < 1.0:
            raise ValueError("prune_eps must be in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class SolverState:
    """One iteration boundary: prior q, mixture masses z, update factors
    eta, and the likelihood trace so far."""

    q: np.ndarray
    z: np.ndarray
    eta: np.ndarray
    iteration: int
    loglik_history: list[float] = field(default_factory=list)


class _RowChunkEngine:
    """Row-chunked sparse matvec with outputs written to disjoint slices.

    Chunk boundaries depend only on the matrix size, so results are
    bit-identical for any thread count; each output element is produced
    by exactly one chunk, in CSR index order.
    """

    def __init__(self, matrix: sp.csr_matrix, threads: int | None = None):
        self.n = matrix.shape[0]
        self.bounds = fixed_chunks(self.n, _CHUNK_ROWS)
        self.blocks = [matrix[lo:hi] for lo, hi in self.bounds]
        workers = resolve_threads(threads)
        self._pool = (
            ThreadPoolExecutor(max_workers=workers)
            if workers > 1 and len(self.blocks) > 1
            else None
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(self.n, dtype=np.float64)

        def run(i: int):
            lo, hi = self.bounds[i]
            out[lo:hi] = self.blocks[i] @ x

        if self._pool is None:
            for i in range(len(self.blocks)):
                run(i)
        else:
            list(self._pool.map(run, range(len(self.blocks))))
        return out

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()


def _mixture_mass(s: SparseSimilarity, q: np.ndarray) -> np.ndarray:
    if q.shape != (s.n,):
        raise ValueError(f"q has shape {q.shape}, expected ({s.n},)")
    return s.matrix @ q


def log_likelihood(s: SparseSimilarity, q: np.ndarray) -> float:
    """Mean log mixture mass; -inf if any term has zero mass."""
    z = _mixture_mass(s, np.asarray(q, dtype=np.float64))
    if np.any(z <= 0.0):
        return -np.inf
    return float(np.mean(np.log(z)))


def update_step(s: SparseSimilarity, state: SolverState) -> SolverState:
    """One multiplicative update.  The new q sums to 1 by construction;
    the numerical check enforces it to 1e-12."""
    engine = _RowChunkEngine(s.matrix, threads=1)
    return _update(engine, s.n, state)


def _update(engine: _RowChunkEngine, n: int, state: SolverState) -> SolverState:
    z = engine.matvec(state.q)
    dead = np.nonzero(z <= 0.0)[0]
    if dead.size:
        raise DisconnectedSupportError(
            f"disconnected support: {dead.size} term(s) have zero mixture "
            f"mass (first: {int(dead[0])}); pruning removed their entire "
            f"neighborhood"
        )
    # s is symmetric, so the column sums in eta are row sums against 1/z.
    eta = engine.matvec(1.0 / z) / n
    q_new = eta * state.q
    total = float(q_new.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise FloatingPointError(
            f"update lost simplex normalization: sum(q) = {total!r}"
        )
    return SolverState(
        q=q_new,
        z=z,
        eta=eta,
        iteration=state.iteration + 1,
        loglik_history=state.loglik_history,
    )


def responsibilities(s: SparseSimilarity, q: np.ndarray) -> sp.csr_matrix:
    """Soft assignment r_ij = s_ij * q_j / z_i on the stored sparsity
    pattern, restricted to columns with q_j > 0.  Rows sum to 1."""
    q = np.asarray(q, dtype=np.float64)
    z = _mixture_mass(s, q)
    dead = np.nonzero(z <= 0.0)[0]
    if dead.size:
        raise DisconnectedSupportError(
            f"cannot compute responsibilities: {dead.size} term(s) have "
            f"zero mixture mass"
        )
    m = s.matrix
    row_lengths = np.diff(m.indptr)
    data = m.data * q[m.indices]
    data /= np.repeat(z, row_lengths)
    r = sp.csr_matrix((data, m.indices.copy(), m.indptr.copy()), shape=m.shape)
    r.eliminate_zeros()
    return r


@dataclass(frozen=True)
class TopicModel:
    """Fitted exemplar weights plus derived topic structure."""

    q: np.ndarray
    exemplars: np.ndarray
    responsibilities: sp.csr_matrix
    loglik: float
    loglik_trace: tuple[float, ...]
    eta: np.ndarray
    config: SolverConfig
    iterations: int
    converged: bool

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def n_topics(self) -> int:
        return int(self.exemplars.size)


def fit(
    s: SparseSimilarity,
    config: SolverConfig = SolverConfig(),
    q0: np.ndarray | None = None,
) -> TopicModel:
    """Run the multiplicative updates from the uniform start.

    After each update, weights below prune_eps * max(q) are zeroed and q
    is renormalized; convergence is declared after `patience` consecutive
    iterations whose relative likelihood improvement is below `tol`.
    Non-convergence at max_iter returns the model with converged=False.

    Convexity makes the optimum independent of the start; ``q0`` (any
    strictly positive vector, normalized here) exists to let tests verify
    exactly that.  Multiplicative updates cannot revive exact zeros, so
    q0 must be positive everywhere.
    """
    n = s.n
    engine = _RowChunkEngine(s.matrix, threads=config.threads)
    try:
        if q0 is None:
            q = np.full(n, 1.0 / n, dtype=np.float64)
        else:
            q = np.asarray(q0, dtype=np.float64).copy()
            if q.shape != (n,) or np.any(q <= 0.0):
                raise ValueError(
                    "q0 must be strictly positive with one entry per term"
                )
            q /= q.sum()
        previous = float(np.mean(np.log(engine.matvec(q))))
        trace: list[float] = [previous]
        state = SolverState(q=q, z=np.empty(0), eta=np.empty(0), iteration=0,
                            loglik_history=trace)
        streak = 0
        converged = False
        for _ in range(config.max_iter):
            state = _update(engine, n, state)
            # Realize "q_j > 0": decay below the relative threshold becomes
            # an exact zero, then mass is renormalized onto the survivors.
            q = state.q
            q[q < config.prune_eps * q.max()] = 0.0
            q /= q.sum()
            z = engine.matvec(q)
            if np.any(z <= 0.0):
                raise DisconnectedSupportError(
                    "pruning removed the entire neighborhood of some term"
                )
            current = float(np.mean(np.log(z)))
            trace.append(current)
            denom = abs(previous) if previous != 0.0 else 1.0
            if (current - previous) / denom < config.tol:
                streak += 1
                if streak >= config.patience:
                    converged = True
                    break
            else:
                streak = 0
            previous = current

        eta_final = engine.matvec(1.0 / z) / n
    finally:
        engine.close()
    return TopicModel(
        q=q,
        exemplars=np.nonzero(q > 0.0)[0],
        responsibilities=responsibilities(s, q),
        loglik=trace[-1],
        loglik_trace=tuple(trace),
        eta=eta_final,
        config=config,
        iterations=state.iteration,
        converged=converged,
    )


@dataclass(frozen=True)
class Topic:
    exemplar_id: int
    exemplar_term: str
    weight: float
    members: tuple[tuple[int, float], ...]  # (term id, responsibility)


def _term_strings(vocab_or_terms) -> Sequence[str]:
    terms = getattr(vocab_or_terms, "terms", vocab_or_terms)
    return list(terms)


def extract_topics(model: TopicModel, vocab_or_terms) -> list[Topic]:
    """One topic per exemplar, ordered by weight (descending, then id);
    members are every term with positive responsibility to the exemplar,
    ordered by responsibility (descending, then term id)."""
    terms = _term_strings(vocab_or_terms)
    if len(terms) != model.n:
        raise ValueError(
            f"{len(terms)} term strings for a model over {model.n} terms"
        )
    csc = model.responsibilities.tocsc()
    order = sorted(model.exemplars.tolist(), key=lambda j: (-model.q[j], j))
    topics = []
    for j in order:
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        rows = csc.indices[lo:hi]
        vals = csc.data[lo:hi]
        member_order = np.lexsort((rows, -vals))
        members = tuple(
            (int(rows[i]), float(vals[i])) for i in member_order
        )
        topics.append(
            Topic(
                exemplar_id=j,
                exemplar_term=terms[j],
                weight=float(model.q[j]),
                members=members,
            )
        )
    return topics


def model_to_dict(model: TopicModel, vocab_or_terms) -> dict:
    """JSON-ready model: n, config, likelihood trace, sparse q, topics.

    The thread count is an execution setting, not a model parameter, so
    it is omitted from the config echo (artifacts must not depend on it).
    """
    topics = extract_topics(model, vocab_or_terms)
    return {
        "n": model.n,
        "config": {
            "tol": model.config.tol,
            "patience": model.config.patience,
            "max_iter": model.config.max_iter,
            "prune_eps": model.config.prune_eps,
        },
        "loglik_trace": list(model.loglik_trace),
        "q": [[int(j), float(model.q[j])] for j in model.exemplars],
        "topics": [
            {
                "exemplar_id": t.exemplar_id,
                "exemplar_term": t.exemplar_term,
                "members": [[i, r] for i, r in t.members],
            }
            for t in topics
        ],
    }


def save_model(model: TopicModel, vocab_or_terms, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, vocab_or_terms), fh, ensure_ascii=False)
        fh.write("\n")


def model_from_dict(data: dict) -> TopicModel:
    """Rebuild a fitted model from its JSON form (eta is recomputable but
    not serialized; it is restored as NaN placeholders)."""
    n = int(data["n"])
    q = np.zeros(n, dtype=np.float64)
    for j, value in data["q"]:
        q[int(j)] = float(value)
    rows, cols, vals = [], [], []
    for topic in data["topics"]:
        j = int(topic["exemplar_id"])
        for i, r in topic["members"]:
            rows.append(int(i))
            cols.append(j)
            vals.append(float(r))
    resp = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n, n), dtype=np.float64
    )
    trace = tuple(float(x) for x in data["loglik_trace"])
    cfg = data["config"]
    return TopicModel(
        q=q,
        exemplars=np.nonzero(q > 0.0)[0],
        responsibilities=resp,
        loglik=trace[-1] if trace else -np.inf,
        loglik_trace=trace,
        eta=np.full(n, np.nan),
        config=SolverConfig(
            tol=float(cfg["tol"]),
            patience=int(cfg["patience"]),
            max_iter=int(cfg["max_iter"]),
            prune_eps=float(cfg["prune_eps"]),
        ),
        iterations=len(trace),
        converged=True,
    )


def load_model(path: str | Path) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
