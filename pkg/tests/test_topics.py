import math

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from conftest import synthetic_topic_corpus
from secure_kgcomm.corpus import Corpus
from secure_kgcomm.errors import ClusteringError, TopicModelError
from secure_kgcomm.topics import (LdaModel, TopicConfig, cluster_sentences, lda_train, lloyd_kmeans,
                                  preprocess, purity, topic_distance_js)


def test_single_token_theta():
    corpus = Corpus.from_texts(['hello.'])
    model = lda_train(corpus, num_topics=2, iterations=5, seed=3)
    phi_ = model.doc_topic_prior
    expected = sorted([(1 + phi_) / (1 + 2 * phi_), phi_ / (1 + 2 * phi_)])
    assert sorted(model.theta[0].tolist()) == pytest.approx(expected)


@pytest.fixture(scope='module')
def three_topics():
    corpus, vocabularies, truth = synthetic_topic_corpus()
    model = lda_train(corpus, num_topics=3, iterations=100, seed=5)
    return corpus, vocabularies, truth, model


def test_lda_recovers_generating_topics(three_topics):
    corpus, vocabularies, _, model = three_topics
    vocab = corpus.vocabulary
    inferred = [set(vocab.token_of(w) for w in model.top_words(k, 10)) for k in range(3)]
    for words in vocabularies:
        # the five most frequent true words; uniform generator so any five of the ten will do
        top5 = set(words[:5])
        assert any(top5 <= found for found in inferred)


def test_lda_counts_stay_consistent(three_topics):
    _, _, _, model = three_topics
    model.check_counts()
    assert model.n_kw.shape == (3, model.vocab_size)
    assert np.allclose(model.phi.sum(axis=1), 1.0)
    assert np.allclose(model.theta.sum(axis=1), 1.0)


def test_lda_is_deterministic():
    corpus, _, _ = synthetic_topic_corpus(num_docs=12, doc_len=20)
    a = lda_train(corpus, num_topics=3, iterations=10, seed=9)
    b = lda_train(corpus, num_topics=3, iterations=10, seed=9)
    assert np.array_equal(a.assignments, b.assignments)


def test_lda_debug_mode_checks_counts():
    corpus, _, _ = synthetic_topic_corpus(num_docs=6, doc_len=10)
    model = lda_train(corpus, num_topics=2, iterations=3, seed=1, debug=True)
    model.check_counts()


def test_lda_rejects_single_topic():
    with pytest.raises(TopicModelError):
        lda_train(Corpus.from_texts(['a b c.']), num_topics=1)


def test_lda_persistence(tmp_path, three_topics):
    _, _, _, model = three_topics
    path = tmp_path / 'lda.json'
    model.dump(path)
    restored = LdaModel.load(path)
    assert np.array_equal(restored.n_dk, model.n_dk)
    assert np.array_equal(restored.n_wk, model.n_wk)
    assert np.allclose(restored.phi, model.phi)


def test_fold_in_does_not_touch_the_model(three_topics):
    corpus, _, _, model = three_topics
    before = model.n_wk.copy()
    theta = model.fold_in(corpus.documents[0].sentences[0], sweeps=5)
    assert theta.sum() == pytest.approx(1.0)
    assert np.array_equal(before, model.n_wk)
    assert model.fold_in([]).tolist() == pytest.approx([1 / 3] * 3)


def test_js_identical_distributions():
    assert topic_distance_js([0.5, 0.5], [0.5, 0.5]) == 0.0


def test_js_disjoint_supports():
    assert topic_distance_js([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.log(2))


def test_js_matches_direct_kl_terms():
    p = [0.75, 0.25]
    q = [0.25, 0.75]
    m = [0.5, 0.5]
    kl_pm = sum(a * math.log(a / b) for a, b in zip(p, m))
    kl_qm = sum(a * math.log(a / b) for a, b in zip(q, m))
    assert topic_distance_js(p, q) == pytest.approx(0.5 * (kl_pm + kl_qm), abs=1e-12)


@st.composite
def distributions(draw, size=4):
    weights = draw(st.lists(st.floats(0.0, 1.0), min_size=size, max_size=size).filter(lambda w: sum(w) > 1e-3))
    total = sum(weights)
    return [w / total for w in weights]


@given(distributions(), distributions())
def test_js_symmetric_and_bounded(p, q):
    d = topic_distance_js(p, q)
    assert d == topic_distance_js(q, p)
    assert 0.0 <= d <= math.log(2) + 1e-12


def test_js_rejects_non_distributions():
    with pytest.raises(TopicModelError):
        topic_distance_js([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(TopicModelError):
        topic_distance_js([1.0], [0.5, 0.5])


def test_kmeans_separated_blobs():
    rng = np.random.default_rng(0)
    centers = np.eye(3)
    truth = np.repeat(np.arange(3), 20)
    points = centers[truth] + 0.01 * rng.standard_normal((60, 3))
    result = lloyd_kmeans(points, 3, seed=2, n_init=50)
    assert purity(result.labels, truth) == 1.0
    assert len(result.members) == 3


def test_kmeans_one_cluster_per_point():
    points = np.random.default_rng(1).random((6, 2))
    result = lloyd_kmeans(points, 6, seed=0)
    assert sorted(result.labels) == list(range(6))
    assert result.inertia == pytest.approx(0.0, abs=1e-24)


def test_kmeans_identical_points():
    points = np.tile([0.2, 0.3, 0.5], (5, 1))
    result = lloyd_kmeans(points, 1)
    assert np.allclose(result.centroids[0], [0.2, 0.3, 0.5])


def test_kmeans_inertia_never_increases():
    points = np.random.default_rng(4).random((40, 3))
    history = lloyd_kmeans(points, 4, seed=1).inertia_history
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_kmeans_bad_k():
    with pytest.raises(ClusteringError):
        lloyd_kmeans(np.zeros((3, 2)), 4)
    corpus = Corpus.from_texts(['a b.'])
    model = lda_train(corpus, num_topics=2, iterations=1)
    with pytest.raises(ClusteringError):
        cluster_sentences(model, corpus, 2)


def test_preprocess_single_sentence():
    corpus = Corpus.from_texts(['Alan Turing was born in London.'])
    annotated = preprocess(corpus, TopicConfig(num_topics=2, iterations=5, k_clusters=1))
    assert annotated.sentence_topics == (0,)
    assert annotated.topic_of(0, 0) == 0


def test_preprocess_annotation_purity_and_determinism():
    corpus, _, truth = synthetic_topic_corpus(num_docs=30, doc_len=30, seed=3)
    cfg = TopicConfig(num_topics=3, iterations=60, fold_in_sweeps=20, k_clusters=3, kmeans_n_init=50, seed=4)
    first = preprocess(corpus, cfg)
    assert purity(first.sentence_topics, truth) >= 0.9
    assert preprocess(corpus, cfg).sentence_topics == first.sentence_topics


def test_kmeans_restarts_never_do_worse():
    points = np.random.default_rng(8).random((30, 2))
    single = lloyd_kmeans(points, 5, seed=3)
    restarted = lloyd_kmeans(points, 5, seed=3, n_init=8)
    # the first restart draws the same initial points as the single run
    assert restarted.inertia <= single.inertia
    with pytest.raises(ClusteringError):
        lloyd_kmeans(points, 2, n_init=0)
