"""Static HTML report: topics, member terms, top-ranked documents.

Self-contained single page, deterministic bytes (no timestamps, no
scripts), navigable through in-page anchors only.
"""

from __future__ import annotations

from html import escape
from pathlib import Path
from typing import Sequence

from .evaluation import EvalReport
from .scoring import DocumentScore
from .solver import TopicModel, Topic, extract_topics
from .vocabulary import Vocabulary

_TOP_DOCS = 30
_TOP_TERMS = 15

_STYLE = """
body { font-family: sans-serif; margin: 2em auto; max-width: 60em; }
h2 { border-bottom: 1px solid #ccc; padding-bottom: 0.2em; }
table { border-collapse: collapse; margin: 0.5em 0; }
td, th { border: 1px solid #ddd; padding: 0.25em 0.6em; text-align: left; }
.weight { color: #666; font-size: 0.9em; }
.terms { margin: 0.3em 0; }
nav ul { columns: 3; list-style: none; padding-left: 0; }
"""


def render_report(
    model: TopicModel,
    vocab: Vocabulary,
    rankings: Sequence[DocumentScore],
    eval_report: EvalReport | None = None,
    title: str = "Topic report",
) -> str:
    topics = extract_topics(model, vocab)
    ranking_by_topic = {ds.topic_id: ds for ds in rankings}

    parts: list[str] = []
    parts.append("<!DOCTYPE html>")
    parts.append("<html><head><meta charset='utf-8'>")
    parts.append(f"<title>{escape(title)}</title>")
    parts.append(f"<style>{_STYLE}</style></head><body>")
    parts.append(f"<h1>{escape(title)}</h1>")
    parts.append(
        f"<p>{model.n} terms, {len(topics)} topics, "
        f"final objective {model.loglik:.6f}.</p>"
    )

    if eval_report is not None:
        parts.append("<h2>Label alignment</h2>")
        parts.append(
            f"<p>MaxMAP <b>{eval_report.maxmap:.4f}</b> over the top "
            f"{eval_report.n_used} of {eval_report.n_labels_qualified} "
            f"qualified labels.</p>"
        )
        parts.append("<table><tr><th>label</th><th>best topic</th>"
                     "<th>AP</th></tr>")
        for rec in eval_report.labels[: eval_report.n_used]:
            parts.append(
                f"<tr><td>{escape(rec.label)}</td>"
                f"<td><a href='#topic-{rec.best_topic_id}'>"
                f"{rec.best_topic_id}</a></td>"
                f"<td>{rec.ap:.4f}</td></tr>"
            )
        parts.append("</table>")

    parts.append("<h2>Topics</h2>")
    parts.append("<nav><ul>")
    for topic in topics:
        parts.append(
            f"<li><a href='#topic-{topic.exemplar_id}'>"
            f"{escape(topic.exemplar_term)}</a></li>"
        )
    parts.append("</ul></nav>")

    for topic in topics:
        parts.append(_render_topic(topic, vocab, ranking_by_topic.get(topic.exemplar_id)))

    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def _render_topic(
    topic: Topic, vocab: Vocabulary, ranking: DocumentScore | None
) -> str:
    lines = []
    lines.append(
        f"<h3 id='topic-{topic.exemplar_id}'>"
        f"{escape(topic.exemplar_term)} "
        f"<span class='weight'>(topic {topic.exemplar_id}, "
        f"weight {topic.weight:.6g})</span></h3>"
    )
    shown = topic.members[:_TOP_TERMS]
    rendered = ", ".join(
        f"{escape(vocab.terms[i])} ({r:.3f})" for i, r in shown
    )
    more = len(topic.members) - len(shown)
    suffix = f", &#8230; ({more} more)" if more > 0 else ""
    lines.append(f"<p class='terms'>{rendered}{suffix}</p>")
    if ranking is not None:
        lines.append("<table><tr><th>#</th><th>document</th><th>score</th></tr>")
        for pos, (doc_id, score) in enumerate(ranking.ranking[:_TOP_DOCS], 1):
            lines.append(
                f"<tr><td>{pos}</td><td>{escape(doc_id)}</td>"
                f"<td>{score:.6f}</td></tr>"
            )
        lines.append("</table>")
    return "\n".join(lines)


def save_report_html(
    model: TopicModel,
    vocab: Vocabulary,
    rankings: Sequence[DocumentScore],
    eval_report: EvalReport | None,
    path: str | Path,
    title: str = "Topic report",
) -> None:
    html = render_report(model, vocab, rankings, eval_report, title=title)
    Path(path).write_text(html, encoding="utf-8")
