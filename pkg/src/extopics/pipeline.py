"""End-to-end run driven by a single flat configuration.

Stages: load -> vocabulary -> similarity -> fit -> rank -> evaluate.
Every stage writes its artifact into the output directory and records a
cache key (a digest of its inputs and parameters); a re-run with matching
keys reloads artifacts instead of recomputing, which mainly pays off for
the similarity build.  The manifest is a run record (config echo, input
digests, versions, per-stage wall clock); data artifacts are byte-stable
across runs and thread counts, the manifest is not.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .corpus import (
    Corpus,
    Document,
    load_background,
    load_corpus,
    load_stopwords,
)
from .evaluation import EvalConfig, EvalReport, load_report, maxmap, save_report
from .scoring import (
    DocumentScore,
    LocalWeightConfig,
    load_rankings,
    rank_documents,
    save_rankings,
    truncate_rankings,
)
from .similarity import SparseSimilarity, build_similarity
from .solver import SolverConfig, TopicModel, fit, load_model, save_model
from .vocabulary import (
    Vocabulary,
    build_vocabulary,
    load_vocabulary,
    save_vocabulary,
)

STAGES = ("load", "vocabulary", "similarity", "fit", "rank", "evaluate")

ARTIFACTS = {
    "load": "corpus_cache.json",
    "vocabulary": "vocabulary.json",
    "similarity": "similarity.bin",
    "fit": "model.json",
    "rank": "scores.json",
    "evaluate": "eval.json",
}

_KEYS_FILE = "stage_keys.json"


class PipelineError(RuntimeError):
    """A stage failed; the message names the stage and the cause."""


@dataclass
class RunConfig:
    corpus: Path
    output: Path
    format: str = "jsonl"
    background: Path | None = None
    stopwords: Path | None = None
    fdr: float = 0.01
    cutoff: float = 0.05
    min_df: int = 5
    max_df_ratio: float = 0.5
    max_phrase_len: int = 3
    tol: float = 1e-9
    patience: int = 3
    max_iter: int = 10_000
    prune_eps: float = 1e-6
    lw_k: float = 1.0
    length_normalize: bool = True
    top_k: int | None = None
    top_n: int | None = None
    min_positives: int = 5
    threads: int | None = None

    def validate(self) -> None:
        if self.format not in ("jsonl", "twenty_news_dir"):
            raise ValueError(f"unknown corpus format {self.format!r}")
        for name in ("corpus", "background", "stopwords"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name} path does not exist: {path}")
        if not 0.0 < self.fdr < 1.0:
            raise ValueError(f"fdr must be in (0, 1), got {self.fdr}")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError(f"cutoff must be in [0, 1), got {self.cutoff}")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")
        if not 0.0 < self.max_df_ratio <= 1.0:
            raise ValueError("max_df_ratio must be in (0, 1]")
        if self.max_phrase_len < 1:
            raise ValueError("max_phrase_len must be >= 1")
        if self.lw_k <= 0.0:
            raise ValueError("lw_k must be > 0")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")
        self.solver_config()  # range checks
        EvalConfig(top_n=self.top_n, min_positives=self.min_positives,
                   fdr=self.fdr)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            tol=self.tol,
            patience=self.patience,
            max_iter=self.max_iter,
            prune_eps=self.prune_eps,
            threads=self.threads,
        )

    def eval_config(self) -> EvalConfig:
        return EvalConfig(top_n=self.top_n, min_positives=self.min_positives,
                          fdr=self.fdr)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = str(value) if isinstance(value, Path) else value
        return out


_PATH_KEYS = ("corpus", "output", "background", "stopwords")


def config_from_file(path: str | Path) -> RunConfig:
    """Flat TOML config; keys mirror RunConfig fields and relative paths
    resolve against the config file's directory."""
    path = Path(path)
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return config_from_mapping(data, base_dir=path.parent)


def config_from_mapping(data: dict, base_dir: Path | None = None) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    if "corpus" not in data or "output" not in data:
        raise ValueError("config must set 'corpus' and 'output'")
    kwargs = dict(data)
    for key in _PATH_KEYS:
        if kwargs.get(key) is not None:
            p = Path(kwargs[key])
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            kwargs[key] = p
    return RunConfig(**kwargs)


def _file_digest(path: str | Path | None) -> str | None:
    if path is None:
        return None
    h = hashlib.sha256()
    path = Path(path)
    if path.is_dir():
        for sub in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(sub.relative_to(path)).encode())
            h.update(sub.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def _stage_key(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class StageRecord:
    name: str
    status: str  # computed | cached | skipped
    seconds: float
    artifact: str | None


@dataclass
class PipelineResult:
    corpus: Corpus
    vocabulary: Vocabulary | None = None
    similarity: SparseSimilarity | None = None
    model: TopicModel | None = None
    rankings: list[DocumentScore] | None = None
    report: EvalReport | None = None
    stages: list[StageRecord] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def _save_corpus_cache(corpus: Corpus, max_phrase_len: int, path: Path) -> None:
    data = {
        "max_phrase_len": max_phrase_len,
        "documents": [
            {
                "id": doc.id,
                "labels": sorted(doc.labels),
                "segments": [list(seg) for seg in doc.segments],
            }
            for doc in corpus.documents
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, ensure_ascii=False)
        fh.write("\n")


def _load_corpus_cache(path: Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    max_phrase_len = int(data["max_phrase_len"])
    return Corpus(
        Document.from_segments(
            id=rec["id"],
            segments=rec["segments"],
            labels=rec["labels"],
            max_phrase_len=max_phrase_len,
        )
        for rec in data["documents"]
    )


def run_pipeline(
    config: RunConfig,
    until: str = "evaluate",
    on_stage: Callable[[StageRecord], None] | None = None,
    require_upstream: bool = False,
) -> PipelineResult:
    """Execute stages in order through ``until`` and write artifacts,
    cache keys, and the run manifest into the output directory.

    With ``require_upstream``, stages before ``until`` must already have
    up-to-date artifacts in the output directory (single-stage commands
    reuse earlier work instead of silently recomputing it)."""
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    config.validate()
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    keys_path = out_dir / _KEYS_FILE
    old_keys: dict = {}
    if keys_path.exists():
        try:
            old_keys = json.loads(keys_path.read_text())
        except (OSError, json.JSONDecodeError):
            old_keys = {}

    digests = {
        "corpus": _file_digest(config.corpus),
        "background": _file_digest(config.background),
        "stopwords": _file_digest(config.stopwords),
    }
    keys: dict[str, str] = {}
    keys["load"] = _stage_key(
        {
            "stage": "load",
            "corpus": digests["corpus"],
            "stopwords": digests["stopwords"],
            "format": config.format,
            "max_phrase_len": config.max_phrase_len,
        }
    )
    keys["vocabulary"] = _stage_key(
        {
            "stage": "vocabulary",
            "load": keys["load"],
            "background": digests["background"],
            "fdr": config.fdr,
            "min_df": config.min_df,
            "max_df_ratio": config.max_df_ratio,
        }
    )
    keys["similarity"] = _stage_key(
        {"stage": "similarity", "vocabulary": keys["vocabulary"],
         "cutoff": config.cutoff}
    )
    keys["fit"] = _stage_key(
        {
            "stage": "fit",
            "similarity": keys["similarity"],
            "tol": config.tol,
            "patience": config.patience,
            "max_iter": config.max_iter,
            "prune_eps": config.prune_eps,
        }
    )
    keys["rank"] = _stage_key(
        {
            "stage": "rank",
            "fit": keys["fit"],
            "lw_k": config.lw_k,
            "length_normalize": config.length_normalize,
            "top_k": config.top_k,
        }
    )
    keys["evaluate"] = _stage_key(
        {
            "stage": "evaluate",
            "rank": keys["rank"],
            "background": digests["background"],
            "top_n": config.top_n,
            "min_positives": config.min_positives,
            "fdr": config.fdr,
        }
    )

    result = PipelineResult(corpus=None)  # type: ignore[arg-type]
    new_keys = dict(old_keys)

    def run_stage(name: str, compute, load, save):
        artifact = out_dir / ARTIFACTS[name]
        t0 = time.perf_counter()
        if load is not None and old_keys.get(name) == keys[name] and artifact.exists():
            value = load(artifact)
            status = "cached"
        elif require_upstream and name != until:
            raise PipelineError(
                f"stage {name!r} has no up-to-date artifact in {out_dir}; "
                f"run the earlier stages (or 'run') first"
            )
        else:
            value = compute()
            save(value, artifact)
            status = "computed"
        if load is not None:
            new_keys[name] = keys[name]
        else:
            new_keys.pop(name, None)
        keys_path.write_text(json.dumps(new_keys, sort_keys=True) + "\n")
        record = StageRecord(
            name=name,
            status=status,
            seconds=time.perf_counter() - t0,
            artifact=ARTIFACTS[name],
        )
        result.stages.append(record)
        if on_stage is not None:
            on_stage(record)
        return value

    stopword_set = load_stopwords(config.stopwords)
    background = (
        load_background(config.background) if config.background else None
    )

    def guarded(name, fn):
        try:
            return fn()
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(f"stage {name!r} failed: {exc}") from exc

    result.corpus = guarded(
        "load",
        lambda: run_stage(
            "load",
            compute=lambda: load_corpus(
                config.corpus,
                format=config.format,
                stopwords=stopword_set,
                max_phrase_len=config.max_phrase_len,
            ),
            load=_load_corpus_cache,
            save=lambda corpus, path: _save_corpus_cache(
                corpus, config.max_phrase_len, path
            ),
        ),
    )
    if background is not None:
        excess = background.excess_terms(result.corpus)
        if excess:
            print(
                f"warning: {len(excess)} term(s) occur more often in the "
                f"focus corpus than in the background snapshot "
                f"(e.g. {excess[0]!r}); counts are clamped",
                file=sys.stderr,
            )
    if until == "load":
        return _finish(result, config, digests, out_dir)

    result.vocabulary = guarded(
        "vocabulary",
        lambda: run_stage(
            "vocabulary",
            compute=lambda: build_vocabulary(
                result.corpus,
                background=background,
                fdr=config.fdr,
                df_band=(config.min_df, config.max_df_ratio),
            ),
            load=lambda path: load_vocabulary(path, result.corpus),
            save=lambda vocab, path: save_vocabulary(vocab, path),
        ),
    )
    if until == "vocabulary":
        return _finish(result, config, digests, out_dir)

    result.similarity = guarded(
        "similarity",
        lambda: run_stage(
            "similarity",
            compute=lambda: build_similarity(
                result.vocabulary, cutoff=config.cutoff, threads=config.threads
            ),
            load=SparseSimilarity.load,
            save=lambda sim, path: sim.save(path),
        ),
    )
    if until == "similarity":
        return _finish(result, config, digests, out_dir)

    result.model = guarded(
        "fit",
        lambda: run_stage(
            "fit",
            compute=lambda: fit(result.similarity, config.solver_config()),
            load=lambda path: load_model(path),
            save=lambda model, path: save_model(
                model, result.vocabulary, path
            ),
        ),
    )
    if until == "fit":
        return _finish(result, config, digests, out_dir)

    def compute_rankings():
        return rank_documents(
            result.corpus,
            result.model,
            result.vocabulary,
            lw=LocalWeightConfig.for_corpus(
                result.corpus,
                k=config.lw_k,
                length_normalize=config.length_normalize,
            ),
            threads=config.threads,
        )

    if config.top_k is None:
        result.rankings = guarded(
            "rank",
            lambda: run_stage(
                "rank",
                compute=compute_rankings,
                load=load_rankings,
                save=lambda rankings, path: save_rankings(rankings, path),
            ),
        )
    else:
        # Truncated exports do not round-trip (evaluation needs the full
        # rankings), so the stage recomputes instead of caching.
        result.rankings = guarded(
            "rank",
            lambda: run_stage(
                "rank",
                compute=compute_rankings,
                load=None,
                save=lambda rankings, path: save_rankings(
                    truncate_rankings(rankings, config.top_k), path
                ),
            ),
        )
    if until == "rank":
        return _finish(result, config, digests, out_dir)

    if not result.corpus.labels():
        record = StageRecord(
            name="evaluate", status="skipped", seconds=0.0, artifact=None
        )
        result.stages.append(record)
        if on_stage is not None:
            on_stage(record)
    else:
        result.report = guarded(
            "evaluate",
            lambda: run_stage(
                "evaluate",
                compute=lambda: maxmap(
                    result.corpus,
                    result.model,
                    result.rankings,
                    config=config.eval_config(),
                    background=background,
                    threads=config.threads,
                ),
                load=load_report,
                save=lambda report, path: save_report(report, path),
            ),
        )
    return _finish(result, config, digests, out_dir)


def _finish(
    result: PipelineResult, config: RunConfig, digests: dict, out_dir: Path
) -> PipelineResult:
    import numpy
    import scipy

    manifest = {
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "versions": {
            "extopics": __version__,
            "python": sys.version.split()[0],
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "config": config.to_dict(),
        "inputs": digests,
        "stages": [
            {
                "name": rec.name,
                "status": rec.status,
                "seconds": round(rec.seconds, 3),
                "artifact": rec.artifact,
            }
            for rec in result.stages
        ],
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    result.manifest = manifest
    return result
