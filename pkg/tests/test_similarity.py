from itertools import combinations

import numpy as np
import pytest

from helpers import corpus_from_token_docs, dice_oracle, random_token_corpus
from extopics.similarity import SparseSimilarity, build_similarity, dice
from extopics.vocabulary import build_vocabulary


class TestDice:
    def test_hand_value(self):
        assert dice(10, 20, 5) == pytest.approx(1 / 3, rel=1e-15)

    def test_identical_sets(self):
        assert dice(7, 7, 7) == 1.0

    def test_disjoint_sets(self):
        assert dice(10, 20, 0) == 0.0

    def test_precondition_violations(self):
        with pytest.raises(ValueError):
            dice(3, 5, 4)
        with pytest.raises(ValueError):
            dice(0, 5, 0)

    def test_matches_exact_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            a = int(rng.integers(1, 50))
            b = int(rng.integers(1, 50))
            c = int(rng.integers(0, min(a, b) + 1))
            assert dice(a, b, c) == pytest.approx(
                float(dice_oracle(a, b, c)), rel=1e-15, abs=0
            )


def _tiny_vocab():
    corpus = corpus_from_token_docs({
        "d1": ["a", "b"],
        "d2": ["a", "b"],
        "d3": ["a", "c"],
    })
    return build_vocabulary(corpus, df_band=(1, 1.0))


class TestBuildSimilarity:
    def test_hand_example(self):
        sim = build_similarity(_tiny_vocab(), cutoff=0.05)
        dense = sim.toarray()
        idx = {"a": 0, "b": 1, "c": 2}
        assert dense[idx["a"], idx["b"]] == pytest.approx(0.8)
        assert dense[idx["a"], idx["c"]] == pytest.approx(0.5)
        assert dense[idx["b"], idx["c"]] == 0.0
        assert np.all(np.diag(dense) == 1.0)

    def test_below_cutoff_absent(self):
        # dice(a, b) = 2*1/(1+49) = 0.04 < 0.05
        docs = {"d0": ["a", "b"]}
        for i in range(1, 49):
            docs[f"d{i:02d}"] = ["b"]
        corpus = corpus_from_token_docs(docs)
        vocab = build_vocabulary(corpus, df_band=(1, 1.0))
        sim = build_similarity(vocab, cutoff=0.05)
        i, j = vocab.index["a"], vocab.index["b"]
        assert sim.toarray()[i, j] == 0.0
        assert build_similarity(vocab, cutoff=0.03).toarray()[i, j] == pytest.approx(0.04)

    def test_single_term_vocabulary(self):
        corpus = corpus_from_token_docs({"d": ["only"]})
        vocab = build_vocabulary(corpus, df_band=(1, 1.0))
        sim = build_similarity(vocab)
        assert sim.n == 1
        assert np.array_equal(sim.toarray(), [[1.0]])

    def test_cutoff_out_of_range(self):
        with pytest.raises(ValueError):
            build_similarity(_tiny_vocab(), cutoff=1.0)

    def test_brute_force_on_random_corpora(self):
        rng = np.random.default_rng(21)
        for trial in range(8):
            corpus = random_token_corpus(rng, n_docs=int(rng.integers(2, 31)))
            vocab = build_vocabulary(corpus, df_band=(1, 1.0))
            cutoff = float(rng.choice([0.0, 0.05, 0.2]))
            sim = build_similarity(vocab, cutoff=cutoff)
            dense = sim.toarray()
            posting_sets = [set(p.tolist()) for p in vocab.postings]
            for i, j in combinations(range(vocab.n), 2):
                co = len(posting_sets[i] & posting_sets[j])
                expect = dice(len(posting_sets[i]), len(posting_sets[j]), co)
                if expect >= cutoff and expect > 0.0:
                    assert dense[i, j] == pytest.approx(expect, rel=1e-15)
                    assert dense[j, i] == dense[i, j]
                else:
                    assert dense[i, j] == 0.0
            sim.validate()

    def test_density_monotone_in_cutoff(self):
        rng = np.random.default_rng(33)
        corpus = random_token_corpus(rng, n_docs=30)
        vocab = build_vocabulary(corpus, df_band=(1, 1.0))
        densities = [
            build_similarity(vocab, cutoff=c).density
            for c in (0.0, 0.1, 0.3, 0.6)
        ]
        assert all(a >= b for a, b in zip(densities, densities[1:]))

    def test_rows_sorted_and_duplicate_free(self):
        rng = np.random.default_rng(8)
        corpus = random_token_corpus(rng, n_docs=25)
        vocab = build_vocabulary(corpus, df_band=(1, 1.0))
        sim = build_similarity(vocab, cutoff=0.0)
        for i in range(sim.n):
            cols, _vals = sim.row(i)
            assert np.all(np.diff(cols) > 0)

    def test_thread_count_does_not_change_bytes(self):
        rng = np.random.default_rng(13)
        corpus = random_token_corpus(rng, n_docs=40, alphabet_size=30)
        vocab = build_vocabulary(corpus, df_band=(1, 1.0))
        base = build_similarity(vocab, cutoff=0.05, threads=1)
        for threads in (2, 4, 8):
            other = build_similarity(vocab, cutoff=0.05, threads=threads)
            assert np.array_equal(base.matrix.indptr, other.matrix.indptr)
            assert np.array_equal(base.matrix.indices, other.matrix.indices)
            assert np.array_equal(base.matrix.data, other.matrix.data)


class TestBinaryCache:
    def test_roundtrip(self, tmp_path):
        sim = build_similarity(_tiny_vocab(), cutoff=0.05)
        path = tmp_path / "sim.bin"
        sim.save(path)
        loaded = SparseSimilarity.load(path)
        assert loaded.n == sim.n
        assert loaded.cutoff == sim.cutoff
        assert np.array_equal(loaded.toarray(), sim.toarray())

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "sim.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            SparseSimilarity.load(path)

    def test_from_dense_requires_symmetry(self):
        with pytest.raises(ValueError, match="symmetric"):
            SparseSimilarity.from_dense([[1.0, 0.3], [0.2, 1.0]])
