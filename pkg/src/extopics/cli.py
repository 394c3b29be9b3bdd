"""Command-line entry point.

Subcommands run individual pipeline stages (reusing cached artifacts in
the output directory), the full pipeline, or the static report export.
Exit codes: 0 success, 1 usage error, 2 runtime error.  Each executed
stage emits a one-line JSON status on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import load_corpus, load_stopwords
from .evaluation import load_report, maxmap, save_report
from .pipeline import (
    ARTIFACTS,
    PipelineError,
    RunConfig,
    StageRecord,
    config_from_file,
    config_from_mapping,
    run_pipeline,
    _load_corpus_cache,
)
from .report import save_report_html
from .scoring import load_rankings
from .solver import load_model
from .vocabulary import load_vocabulary


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract here is 1.
    def error(self, message):
        raise _UsageError(message)


def _unit_interval(name, low_open=False, high=1.0, high_open=True):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number")
        low_ok = value > 0.0 if low_open else value >= 0.0
        high_ok = value < high if high_open else value <= high
        if not (low_ok and high_ok):
            lo = "(0" if low_open else "[0"
            hi = f"{high})" if high_open else f"{high}]"
            raise argparse.ArgumentTypeError(
                f"{name} must be in {lo}, {hi}, got {text}"
            )
        return value

    return parse


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer")
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive number")
    if value <= 0.0:
        raise argparse.ArgumentTypeError("expected a positive number")
    return value


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None,
                     help="flat TOML config file; flags override its keys")
    sub.add_argument("--corpus", type=Path, help="corpus path")
    sub.add_argument("--format", choices=("jsonl", "twenty_news_dir"),
                     help="corpus format (default: jsonl)")
    sub.add_argument("--background", type=Path,
                     help="background stats TSV (#universe header)")
    sub.add_argument("--stopwords", type=Path,
                     help="stopword file, one word per line "
                          "(default: bundled English list)")
    sub.add_argument("--output", type=Path, help="output directory")
    sub.add_argument("--fdr", type=_unit_interval("fdr", low_open=True),
                     help="false discovery rate for vocabulary and label "
                          "filtering (default: 0.01)")
    sub.add_argument("--cutoff", type=_unit_interval("cutoff"),
                     help="similarity sparsification cutoff (default: 0.05)")
    sub.add_argument("--min-df", dest="min_df", type=_positive_int,
                     help="minimum document frequency without a background "
                          "(default: 5)")
    sub.add_argument("--max-df-ratio", dest="max_df_ratio",
                     type=_unit_interval("max-df-ratio", low_open=True,
                                         high_open=False),
                     help="maximum df/n_docs without a background "
                          "(default: 0.5)")
    sub.add_argument("--max-phrase-len", dest="max_phrase_len",
                     type=_positive_int,
                     help="longest candidate phrase in tokens (default: 3)")
    sub.add_argument("--tol", type=_positive_float,
                     help="relative likelihood-improvement threshold "
                          "(default: 1e-9)")
    sub.add_argument("--patience", type=_positive_int,
                     help="consecutive sub-tol iterations before stopping "
                          "(default: 3)")
    sub.add_argument("--max-iter", dest="max_iter", type=_positive_int,
                     help="iteration cap (default: 10000)")
    sub.add_argument("--prune-eps", dest="prune_eps",
                     type=_unit_interval("prune-eps", low_open=True),
                     help="relative weight-pruning threshold (default: 1e-6)")
    sub.add_argument("--lw-k", dest="lw_k", type=_positive_float,
                     help="local-weight saturation constant (default: 1.0)")
    sub.add_argument("--no-length-norm", dest="length_normalize",
                     action="store_false", default=None,
                     help="disable document-length normalization in "
                          "local weights")
    sub.add_argument("--top-n", dest="top_n", type=_positive_int,
                     help="labels averaged into MaxMAP "
                          "(default: min(1000, topic count))")
    sub.add_argument("--min-positives", dest="min_positives",
                     type=_positive_int,
                     help="label qualification threshold without a "
                          "background (default: 5)")
    sub.add_argument("--threads", type=_positive_int,
                     help="worker threads (default: available cores)")


def _build_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config is not None:
        config = config_from_file(args.config)
        data = {k: v for k, v in config.to_dict().items() if v is not None}
    for key in (
        "corpus", "format", "background", "stopwords", "output", "fdr",
        "cutoff", "min_df", "max_df_ratio", "max_phrase_len", "tol",
        "patience", "max_iter", "prune_eps", "lw_k", "length_normalize",
        "top_k", "top_n", "min_positives", "threads",
    ):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if "corpus" not in data:
        raise _UsageError("a corpus is required (--corpus or a config file)")
    if "output" not in data:
        raise _UsageError("an output directory is required (--output or a "
                          "config file)")
    try:
        return config_from_mapping(data)
    except (ValueError, TypeError) as exc:
        raise _UsageError(str(exc)) from exc


def _print_stage(record: StageRecord) -> None:
    print(json.dumps({
        "stage": record.name,
        "status": record.status,
        "seconds": round(record.seconds, 3),
        "artifact": record.artifact,
    }))


_STAGE_OF_COMMAND = {
    "ingest": "load",
    "vocab": "vocabulary",
    "similarity": "similarity",
    "fit": "fit",
    "score": "rank",
    "eval": "evaluate",
    "run": "evaluate",
}


def _cmd_stage(args: argparse.Namespace) -> int:
    config = _build_config(args)
    until = _STAGE_OF_COMMAND[args.command]
    single_stage = args.command not in ("run", "ingest")
    run_pipeline(config, until=until, on_stage=_print_stage,
                 require_upstream=single_stage)
    if args.command == "run":
        print(json.dumps({
            "stage": "run",
            "status": "ok",
            "output": str(config.output),
        }))
    return 0


def _cmd_eval_external(args: argparse.Namespace) -> int:
    config = _build_config(args)
    out_dir = Path(config.output)
    cache = out_dir / ARTIFACTS["load"]
    if cache.exists():
        corpus = _load_corpus_cache(cache)
    else:
        stop = load_stopwords(config.stopwords)
        corpus = load_corpus(config.corpus, format=config.format,
                             stopwords=stop,
                             max_phrase_len=config.max_phrase_len)
    rankings = load_rankings(args.rankings)
    background = None
    if config.background:
        from .corpus import load_background

        background = load_background(config.background)
    report = maxmap(corpus, None, rankings, config=config.eval_config(),
                    background=background, threads=config.threads)
    path = out_dir / "eval_external.json"
    out_dir.mkdir(parents=True, exist_ok=True)
    save_report(report, path)
    print(json.dumps({
        "stage": "evaluate",
        "status": "computed",
        "artifact": path.name,
        "maxmap": report.maxmap,
    }))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.output)
    model_path = out_dir / ARTIFACTS["fit"]
    scores_path = out_dir / ARTIFACTS["rank"]
    vocab_path = out_dir / ARTIFACTS["vocabulary"]
    corpus_cache = out_dir / ARTIFACTS["load"]
    for path in (model_path, scores_path, vocab_path, corpus_cache):
        if not path.exists():
            raise FileNotFoundError(
                f"missing pipeline artifact {path.name} in {out_dir} "
                f"(run the earlier stages first)"
            )
    corpus = _load_corpus_cache(corpus_cache)
    vocab = load_vocabulary(vocab_path, corpus)
    model = load_model(model_path)
    rankings = load_rankings(scores_path)
    eval_path = out_dir / ARTIFACTS["evaluate"]
    eval_report = load_report(eval_path) if eval_path.exists() else None
    out_path = Path(args.out) if args.out else out_dir / "report.html"
    save_report_html(model, vocab, rankings, eval_report, out_path,
                     title=args.title)
    print(json.dumps({
        "stage": "report",
        "status": "computed",
        "artifact": out_path.name,
    }))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="extopics",
        description="Exemplar-based convex topic modeling over term "
                    "co-occurrence.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    stage_help = {
        "ingest": "load and tokenize the corpus",
        "vocab": "filter candidate terms into the working vocabulary",
        "similarity": "build the sparse Dice similarity matrix",
        "fit": "fit exemplar weights and extract topics",
        "score": "rank documents per topic",
        "eval": "label-alignment evaluation (MaxMAP)",
        "run": "run every stage end to end",
    }
    for name, help_text in stage_help.items():
        p = sub.add_parser(name, help=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_config_flags(p)
        if name in ("score", "run"):
            p.add_argument("--top-k", dest="top_k", type=_positive_int,
                           default=None,
                           help="truncate the exported rankings to the top "
                                "k documents (evaluation always sees the "
                                "full rankings; a truncated export is not "
                                "reused on later runs)")
        if name == "eval":
            p.add_argument("--rankings", type=Path, default=None,
                           help="evaluate external rankings (scores JSON "
                                "format) instead of the fitted model's")

    p = sub.add_parser("report", help="export a static HTML report",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--output", type=Path, required=True,
                   help="pipeline output directory holding the artifacts")
    p.add_argument("--out", type=Path, default=None,
                   help="report path (default: <output>/report.html)")
    p.add_argument("--title", default="Topic report", help="page title")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "eval" and args.rankings is not None:
            return _cmd_eval_external(args)
        return _cmd_stage(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
