import math
import struct

import numpy as np
import pytest

from icmt.corpus import CorpusBank, ParallelExample
from icmt.retrieval import (
    Bm25Index,
    CoverageUtility,
    EmbeddingFormatError,
    EmbeddingStore,
)


def bank_from(sources):
    return CorpusBank(
        ParallelExample(
            id=f"d:{i}", doc_id="d", position=i, source=s, target="t",
            domain="ted", lang_pair=("en", "fr"),
        )
        for i, s in enumerate(sources)
    )


def dict_bm25_score(docs, query, doc_index, k1=1.2, b=0.75):
    """Straight transcription of the scoring formula over plain dicts."""
    n = len(docs)
    toks = [d.lower().split() for d in docs]
    avglen = sum(len(t) for t in toks) / n
    df = {}
    for t in toks:
        for term in set(t):
            df[term] = df.get(term, 0) + 1
    score = 0.0
    doc = toks[doc_index]
    counts = {}
    for term in doc:
        counts[term] = counts.get(term, 0) + 1
    for term in set(query.lower().split()):
        if term not in counts:
            continue
        idf = math.log(1 + (n - df[term] + 0.5) / (df[term] + 0.5))
        tf = counts[term]
        denom = tf + k1 * (1 - b + b * len(doc) / avglen)
        score += idf * tf * (k1 + 1) / denom
    return score


class TestBm25:
    SOURCES = [
        "the cat sat on the mat",
        "a dog barked at the cat",
        "quantum computing is the future",
        "the the the the",
        "cat cat cat dog",
    ]

    def test_scores_match_dict_oracle(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        for query in ("the cat", "dog", "quantum future cat", "unseen words only"):
            got = index.score_all(query)
            for i in range(len(self.SOURCES)):
                want = dict_bm25_score(self.SOURCES, query, i)
                assert got[i] == pytest.approx(want, abs=1e-12), (query, i)

    def test_query_term_multiplicity_ignored(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        np.testing.assert_array_equal(
            index.score_all("cat cat cat"), index.score_all("cat")
        )

    def test_topk_ties_break_by_ascending_id(self):
        # two identical documents tie exactly; the earlier id must win
        index = Bm25Index.from_bank(bank_from(["same text", "same text", "other thing"]))
        ranked = index.topk("same text", 2)
        assert [r[0] for r in ranked] == ["d:0", "d:1"]

    def test_topk_orders_by_score(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        ranked = index.topk("cat dog", 3)
        scores = [s for _, s in ranked]
        assert scores == sorted(scores, reverse=True)
        assert ranked[0][0] == "d:4"  # "cat cat cat dog" matches both terms hardest

    def test_unseen_df_zero_idf(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        n = len(self.SOURCES)
        assert index.idf("zzz") == pytest.approx(math.log(1 + (n + 0.5) / 0.5))

    def test_coverage_utility_is_idf_mass_of_covered_terms(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        query = "cat dog future"
        util = CoverageUtility(index, query)
        # d:0 covers {cat}, d:1 covers {dog, cat}
        expected = index.idf("cat") + index.idf("dog")
        assert util.value(("d:0", "d:1")) == pytest.approx(expected, rel=1e-12)
        assert util.value(()) == 0.0

    def test_coverage_utility_gains_shrink_as_selection_grows(self):
        index = Bm25Index.from_bank(bank_from(self.SOURCES))
        util = CoverageUtility(index, "the cat dog quantum")
        empty_gains = util.gains((), ["d:0", "d:1", "d:2", "d:4"])
        later_gains = util.gains(("d:4",), ["d:0", "d:1", "d:2"])
        for cand, g_later in zip(["d:0", "d:1", "d:2"], later_gains):
            g_empty = empty_gains[["d:0", "d:1", "d:2", "d:4"].index(cand)]
            assert g_later <= g_empty + 1e-12


class TestEmbeddingStore:
    def roundtrip(self, tmp_path, ids, matrix):
        store = EmbeddingStore(tuple(ids), matrix)
        path = tmp_path / "vecs.emb1"
        store.save(path)
        return path, EmbeddingStore.load(path)

    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        matrix = rng.standard_normal((7, 5)).astype(np.float32)
        path, loaded = self.roundtrip(tmp_path, [f"id{i}" for i in range(7)], matrix)
        assert loaded.ids == tuple(f"id{i}" for i in range(7))
        assert loaded.matrix.dtype == np.float32
        np.testing.assert_array_equal(loaded.matrix, matrix)
        # ids sidecar sits next to the payload
        assert (tmp_path / "vecs.emb1.ids").exists()

    def test_header_layout(self, tmp_path):
        matrix = np.arange(6, dtype=np.float32).reshape(2, 3)
        path, _ = self.roundtrip(tmp_path, ["a", "b"], matrix)
        blob = path.read_bytes()
        magic, n, d = struct.unpack("<4sII", blob[:12])
        assert magic == b"EMB1"
        assert (n, d) == (2, 3)
        assert struct.unpack("<6f", blob[12:36]) == (0, 1, 2, 3, 4, 5)

    def test_bad_magic_rejected(self, tmp_path):
        path, _ = self.roundtrip(tmp_path, ["a"], np.ones((1, 2), dtype=np.float32))
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(EmbeddingFormatError):
            EmbeddingStore.load(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path, _ = self.roundtrip(tmp_path, ["a", "b"], np.ones((2, 4), dtype=np.float32))
        blob = path.read_bytes()
        path.write_bytes(blob[:-3])
        with pytest.raises(EmbeddingFormatError):
            EmbeddingStore.load(path)

    def test_id_count_mismatch_rejected(self, tmp_path):
        path, _ = self.roundtrip(tmp_path, ["a", "b"], np.ones((2, 4), dtype=np.float32))
        (path.parent / "vecs.emb1.ids").write_text("only-one\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError):
            EmbeddingStore.load(path)

    def test_nearest_pythagoras(self, tmp_path):
        ids = ("origin", "x3", "y4", "far")
        matrix = np.asarray(
            [[0, 0], [3, 0], [0, 4], [30, 40]], dtype=np.float32
        )
        store = EmbeddingStore(ids, matrix)
        got = store.nearest(np.asarray([0.0, 0.0]), 3)
        assert [g[0] for g in got] == ["origin", "x3", "y4"]
        assert got[1][1] == pytest.approx(3.0)
        assert got[2][1] == pytest.approx(4.0)

    def test_nearest_tie_breaks_by_id_and_excludes(self):
        ids = ("b", "a", "q")
        matrix = np.asarray([[1, 0], [1, 0], [5, 5]], dtype=np.float32)
        store = EmbeddingStore(ids, matrix)
        got = store.nearest(np.asarray([0.0, 0.0]), 2)
        assert [g[0] for g in got] == ["a", "b"]
        got = store.nearest(np.asarray([0.0, 0.0]), 2, exclude_ids=["a"])
        assert [g[0] for g in got] == ["b", "q"]

    def test_vector_lookup_and_contains(self):
        store = EmbeddingStore(("a",), np.asarray([[1, 2]], dtype=np.float32))
        np.testing.assert_array_equal(store.vector("a"), [1, 2])
        assert "a" in store and "z" not in store
        with pytest.raises(KeyError):
            store.vector("z")
