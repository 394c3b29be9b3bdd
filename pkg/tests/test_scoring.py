import numpy as np
import pytest

from helpers import corpus_from_token_docs, random_token_corpus
from extopics.scoring import (
    DocumentScore,
    LocalWeightConfig,
    load_rankings,
    local_weight,
    rank_documents,
    save_rankings,
    score_document,
)
from extopics.similarity import build_similarity
from extopics.solver import SolverConfig, fit
from extopics.vocabulary import build_vocabulary


class TestLocalWeight:
    def test_absent_term_is_zero(self):
        cfg = LocalWeightConfig(k=1.0, avg_len=10.0)
        assert local_weight(0, 25, cfg) == 0.0

    def test_average_length_document(self):
        cfg = LocalWeightConfig(k=1.0, avg_len=12.0)
        assert local_weight(3, 12, cfg) == pytest.approx(0.75)

    def test_saturates_toward_one(self):
        # at average document length the normalizer is just k
        cfg = LocalWeightConfig(k=1.0, avg_len=10_000.0)
        assert local_weight(10_000, 10_000, cfg) > 0.999

    def test_strictly_increasing_in_tf(self):
        cfg = LocalWeightConfig(k=1.5, avg_len=10.0)
        values = [local_weight(tf, 40, cfg) for tf in range(0, 41)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_no_length_normalization(self):
        cfg = LocalWeightConfig(k=2.0, length_normalize=False, avg_len=10.0)
        assert local_weight(2, 100, cfg) == pytest.approx(0.5)

    def test_invalid_inputs(self):
        cfg = LocalWeightConfig()
        with pytest.raises(ValueError):
            local_weight(5, 3, cfg)
        with pytest.raises(ValueError):
            LocalWeightConfig(k=0.0)


def _fitted(corpus, **solver_kwargs):
    vocab = build_vocabulary(corpus, df_band=(1, 1.0))
    sim = build_similarity(vocab, cutoff=0.0)
    model = fit(sim, SolverConfig(**solver_kwargs))
    return vocab, sim, model


class TestScoreDocument:
    def test_single_term_contribution(self):
        # Document of three copies of one term at average length:
        # local weight 3/(3+1) = 0.75 times the term's responsibility.
        corpus = corpus_from_token_docs({
            "d1": ["aging", "aging", "aging"],
            "d2": ["gut", "mice", "diet"],
        })
        vocab, _sim, model = _fitted(corpus)
        lw = LocalWeightConfig.for_corpus(corpus)
        doc = corpus["d1"]
        j = int(model.exemplars[0])
        r = model.responsibilities
        i = vocab.index["aging"]
        expected = 0.75 * r[i, j]
        assert score_document(doc, j, r, vocab, lw) == pytest.approx(expected)

    def test_empty_document_scores_zero(self):
        corpus = corpus_from_token_docs({"d1": ["aging"], "d2": []})
        vocab, _sim, model = _fitted(corpus)
        lw = LocalWeightConfig.for_corpus(corpus)
        for j in model.exemplars:
            assert score_document(corpus["d2"], int(j), model.responsibilities,
                                  vocab, lw) == 0.0

    def test_additive_over_terms(self):
        corpus = corpus_from_token_docs({
            "d1": ["aging", "gut"],
            "d2": ["aging"],
            "d3": ["gut"],
        })
        vocab, _sim, model = _fitted(corpus)
        lw = LocalWeightConfig(k=1.0, avg_len=corpus.avg_length)
        j = int(model.exemplars[0])
        r = model.responsibilities
        whole = score_document(corpus["d1"], j, r, vocab, lw)
        i_a, i_g = vocab.index["aging"], vocab.index["gut"]
        w = local_weight(1, 2, lw)
        assert whole == pytest.approx(w * r[i_a, j] + w * r[i_g, j])

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(2)
        corpus = random_token_corpus(rng, n_docs=20)
        vocab, _sim, model = _fitted(corpus)
        lw = LocalWeightConfig.for_corpus(corpus)
        r = model.responsibilities.toarray()
        for doc in corpus:
            for j in model.exemplars.tolist():
                brute = 0.0
                for term, tf in doc.term_freq.items():
                    i = vocab.index.get(term)
                    if i is not None:
                        brute += r[i, j] * local_weight(tf, doc.length, lw)
                got = score_document(doc, j, model.responsibilities, vocab, lw)
                assert got == pytest.approx(brute, rel=1e-12, abs=1e-15)


class TestRankDocuments:
    def test_on_topic_documents_rank_above_off_topic(self):
        # Two disconnected term blocks: cross-block scores are exactly 0.
        corpus = corpus_from_token_docs({
            "a1": ["aging", "muscle"],
            "a2": ["aging", "muscle"],
            "g1": ["gut", "biome"],
            "g2": ["gut", "biome"],
        })
        vocab, _sim, model = _fitted(corpus)
        rankings = rank_documents(corpus, model, vocab)
        aging_block = {"aging", "muscle"}
        for ds in rankings:
            exemplar = vocab.terms[ds.topic_id]
            on_topic = {"a1", "a2"} if exemplar in aging_block else {"g1", "g2"}
            top_two = {doc_id for doc_id, _s in ds.ranking[:2]}
            assert top_two == on_topic
            assert ds.ranking[2][1] == ds.ranking[3][1] == 0.0

    def test_tie_breaks_by_id_ascending(self):
        corpus = corpus_from_token_docs({
            "b": ["aging"],
            "a": ["aging"],
            "c": ["gut"],
        })
        vocab, _sim, model = _fitted(corpus)
        rankings = rank_documents(corpus, model, vocab)
        for ds in rankings:
            scores = {}
            for doc_id, score in ds.ranking:
                scores.setdefault(score, []).append(doc_id)
            for tied in scores.values():
                assert tied == sorted(tied)

    def test_top_k_truncation(self):
        rng = np.random.default_rng(6)
        corpus = random_token_corpus(rng, n_docs=10)
        vocab, _sim, model = _fitted(corpus)
        rankings = rank_documents(corpus, model, vocab, top_k=1)
        assert all(len(ds.ranking) == 1 for ds in rankings)

    def test_rank_invariance_under_positive_scaling(self):
        from dataclasses import replace

        rng = np.random.default_rng(14)
        corpus = random_token_corpus(rng, n_docs=15)
        vocab, _sim, model = _fitted(corpus)
        scaled_r = model.responsibilities * 7.3
        scaled = replace(model, responsibilities=scaled_r)
        base = rank_documents(corpus, model, vocab)
        other = rank_documents(corpus, scaled, vocab)
        for ds_a, ds_b in zip(base, other):
            assert ds_a.topic_id == ds_b.topic_id
            assert [d for d, _ in ds_a.ranking] == [d for d, _ in ds_b.ranking]

    def test_reproducible_across_threads(self):
        rng = np.random.default_rng(19)
        corpus = random_token_corpus(rng, n_docs=40, alphabet_size=25)
        vocab, _sim, model = _fitted(corpus)
        base = rank_documents(corpus, model, vocab, threads=1)
        for threads in (2, 8):
            assert rank_documents(corpus, model, vocab, threads=threads) == base

    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(25)
        corpus = random_token_corpus(rng, n_docs=8)
        vocab, _sim, model = _fitted(corpus)
        rankings = rank_documents(corpus, model, vocab)
        path = tmp_path / "scores.json"
        save_rankings(rankings, path)
        assert load_rankings(path) == rankings
