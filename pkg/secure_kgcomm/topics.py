"""
Topic preprocessing: collapsed Gibbs LDA, Jensen-Shannon topic distance and
k-means annotation of sentences.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import rel_entr

from .corpus import Corpus
from .errors import ClusteringError, TopicModelError
from .logger import logger

PathLike = Union[str, Path]

DEFAULT_DOC_TOPIC_PRIOR = 0.1
DEFAULT_TOPIC_WORD_PRIOR = 0.01
DEFAULT_NUM_TOPICS = 10
DEFAULT_ITERATIONS = 500
DEFAULT_FOLD_IN_SWEEPS = 20
DEFAULT_KMEANS_N_INIT = 10


class LdaModel:
    """
    Collapsed Gibbs state. n_dk/n_wk/n_d/n_k are the sufficient counts;
    n_wk is stored word-major so the per-token column read is contiguous.
    """

    def __init__(self, num_topics: int, vocab_size: int, doc_topic_prior: float,
                 topic_word_prior: float, rng_seed: int):
        if num_topics < 2:
            raise TopicModelError(f'num_topics must be >= 2, got {num_topics}')
        if doc_topic_prior <= 0 or topic_word_prior <= 0:
            raise TopicModelError('priors must be positive')
        self.num_topics = num_topics
        self.vocab_size = vocab_size
        self.doc_topic_prior = doc_topic_prior
        self.topic_word_prior = topic_word_prior
        self.rng_seed = rng_seed
        self.doc_of = np.zeros(0, dtype=np.int64)
        self.word_of = np.zeros(0, dtype=np.int64)
        self.assignments = np.zeros(0, dtype=np.int64)
        self.n_dk = np.zeros((0, num_topics), dtype=np.int64)
        self.n_wk = np.zeros((vocab_size, num_topics), dtype=np.int64)
        self.n_d = np.zeros(0, dtype=np.int64)
        self.n_k = np.zeros(num_topics, dtype=np.int64)

    @property
    def n_kw(self) -> np.ndarray:
        return self.n_wk.T

    @property
    def theta(self) -> np.ndarray:
        phi_ = self.doc_topic_prior
        return (self.n_dk + phi_) / (self.n_d[:, None] + self.num_topics * phi_)

    @property
    def phi(self) -> np.ndarray:
        beta = self.topic_word_prior
        return (self.n_kw + beta) / (self.n_k[:, None] + self.vocab_size * beta)

    def check_counts(self) -> None:
        if not np.array_equal(self.n_dk.sum(axis=1), self.n_d):
            raise TopicModelError('doc-topic counts inconsistent with document totals')
        if not np.array_equal(self.n_wk.sum(axis=0), self.n_k):
            raise TopicModelError('topic-word counts inconsistent with topic totals')
        n_dk = np.zeros_like(self.n_dk)
        np.add.at(n_dk, (self.doc_of, self.assignments), 1)
        if not np.array_equal(n_dk, self.n_dk):
            raise TopicModelError('doc-topic counts inconsistent with assignments')

    def top_words(self, topic: int, n: int) -> List[int]:
        # stable sort so equal probabilities keep id order
        return [int(w) for w in np.argsort(-self.phi[topic], kind='stable')[:n]]

    def fold_in(self, token_ids: Sequence[int], sweeps: int = DEFAULT_FOLD_IN_SWEEPS,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """
        Topic proportions of an unseen token sequence with phi held fixed.
        The model is not modified.
        """
        rng = rng if rng is not None else np.random.default_rng(self.rng_seed)
        k_topics = self.num_topics
        prior = self.doc_topic_prior
        tokens = np.asarray(token_ids, dtype=np.int64)
        counts = np.zeros(k_topics, dtype=np.float64)
        if tokens.size == 0:
            return np.full(k_topics, 1.0 / k_topics)
        phi_t = self.phi.T  # word-major
        z = rng.integers(0, k_topics, size=tokens.size)
        np.add.at(counts, z, 1)
        for _ in range(sweeps):
            u = rng.random(tokens.size)
            for i, w in enumerate(tokens):
                counts[z[i]] -= 1
                p = (counts + prior) * phi_t[w]
                cdf = np.cumsum(p)
                k = min(int(np.searchsorted(cdf, u[i] * cdf[-1], side='right')), k_topics - 1)
                z[i] = k
                counts[k] += 1
        return (counts + prior) / (tokens.size + k_topics * prior)

    def to_dict(self) -> dict:
        return {
            'num_topics': self.num_topics,
            'vocab_size': self.vocab_size,
            'doc_topic_prior': self.doc_topic_prior,
            'topic_word_prior': self.topic_word_prior,
            'rng_seed': self.rng_seed,
            'doc_of': self.doc_of.tolist(),
            'word_of': self.word_of.tolist(),
            'assignments': self.assignments.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> 'LdaModel':
        model = cls(obj['num_topics'], obj['vocab_size'], obj['doc_topic_prior'],
                    obj['topic_word_prior'], obj['rng_seed'])
        model._set_tokens(np.asarray(obj['doc_of'], dtype=np.int64),
                          np.asarray(obj['word_of'], dtype=np.int64),
                          np.asarray(obj['assignments'], dtype=np.int64))
        return model

    def dump(self, path: PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding='utf-8')

    @classmethod
    def load(cls, path: PathLike) -> 'LdaModel':
        return cls.from_dict(json.loads(Path(path).read_text(encoding='utf-8')))

    def _set_tokens(self, doc_of: np.ndarray, word_of: np.ndarray, assignments: np.ndarray) -> None:
        num_docs = int(doc_of.max()) + 1 if doc_of.size else 0
        self.doc_of, self.word_of, self.assignments = doc_of, word_of, assignments
        self.n_dk = np.zeros((num_docs, self.num_topics), dtype=np.int64)
        self.n_wk = np.zeros((self.vocab_size, self.num_topics), dtype=np.int64)
        np.add.at(self.n_dk, (doc_of, assignments), 1)
        np.add.at(self.n_wk, (word_of, assignments), 1)
        self.n_d = self.n_dk.sum(axis=1)
        self.n_k = self.n_wk.sum(axis=0)

    def _sweep(self, u: np.ndarray) -> None:
        k_topics = self.num_topics
        prior = self.doc_topic_prior
        beta = self.topic_word_prior
        v_beta = self.vocab_size * beta
        n_dk, n_wk, n_k, z = self.n_dk, self.n_wk, self.n_k, self.assignments
        for i in range(z.size):
            d = self.doc_of[i]
            w = self.word_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_wk[w, k] -= 1
            n_k[k] -= 1
            p = (n_dk[d] + prior) * (n_wk[w] + beta) / (n_k + v_beta)
            cdf = np.cumsum(p)
            k = min(int(np.searchsorted(cdf, u[i] * cdf[-1], side='right')), k_topics - 1)
            z[i] = k
            n_dk[d, k] += 1
            n_wk[w, k] += 1
            n_k[k] += 1


def lda_train(corpus: Corpus, num_topics: int = DEFAULT_NUM_TOPICS, iterations: int = DEFAULT_ITERATIONS,
              seed: int = 0, doc_topic_prior: float = DEFAULT_DOC_TOPIC_PRIOR,
              topic_word_prior: float = DEFAULT_TOPIC_WORD_PRIOR, debug: bool = False) -> LdaModel:
    if not corpus.documents or corpus.vocab_size == 0:
        raise TopicModelError('cannot train on an empty corpus')
    model = LdaModel(num_topics, corpus.vocab_size, doc_topic_prior, topic_word_prior, seed)
    doc_of = []
    word_of = []
    for di, doc in enumerate(corpus.documents):
        for sentence in doc.sentences:
            doc_of.extend([di] * len(sentence))
            word_of.extend(sentence)
    rng = np.random.default_rng(seed)
    doc_of_arr = np.asarray(doc_of, dtype=np.int64)
    model._set_tokens(doc_of_arr, np.asarray(word_of, dtype=np.int64),
                      rng.integers(0, num_topics, size=doc_of_arr.size))
    # n_d must also cover documents, even if the last ones were empty
    if model.n_dk.shape[0] < len(corpus.documents):
        pad = len(corpus.documents) - model.n_dk.shape[0]
        model.n_dk = np.vstack([model.n_dk, np.zeros((pad, num_topics), dtype=np.int64)])
        model.n_d = model.n_dk.sum(axis=1)
    logger.info(f'lda: {doc_of_arr.size} tokens, {len(corpus.documents)} docs, K={num_topics}, '
                f'phi={doc_topic_prior}, beta={topic_word_prior}, {iterations} sweeps')
    for it in range(iterations):
        model._sweep(rng.random(doc_of_arr.size))
        if debug:
            model.check_counts()
            logger.debug(f'lda sweep {it + 1}/{iterations} ok')
    return model


def topic_distance_js(theta1: Sequence[float], theta2: Sequence[float]) -> float:
    p = np.asarray(theta1, dtype=np.float64)
    q = np.asarray(theta2, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise TopicModelError(f'distribution shapes differ: {p.shape} vs {q.shape}')
    for dist in (p, q):
        if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-6:
            raise TopicModelError('inputs must be probability vectors')
    m = (p + q) / 2
    # elementwise sum first so that swapping the arguments is bit-exact
    return max(0.0, 0.5 * float(np.sum(rel_entr(p, m) + rel_entr(q, m))))


@dataclass(frozen=True)
class ClusterResult:
    centroids: np.ndarray
    labels: Tuple[int, ...]
    inertia_history: Tuple[float, ...] = ()

    @property
    def members(self) -> List[List[int]]:
        groups: List[List[int]] = [[] for _ in range(len(self.centroids))]
        for i, label in enumerate(self.labels):
            groups[label].append(i)
        return groups

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else 0.0


def lloyd_kmeans(vectors: np.ndarray, k_clusters: int, max_iters: int = 100, seed: int = 0,
                 n_init: int = 1) -> ClusterResult:
    """
    Lloyd iteration from k distinct random points. With n_init > 1 the
    clustering is restarted from fresh random points and the run with the
    lowest final inertia wins (the earliest on ties).
    """
    points = np.asarray(vectors, dtype=np.float64)
    n = points.shape[0]
    if k_clusters < 1 or k_clusters > n:
        raise ClusteringError(f'k_clusters={k_clusters} must be in [1, {n}]')
    if n_init < 1:
        raise ClusteringError(f'n_init must be >= 1, got {n_init}')
    rng = np.random.default_rng(seed)
    best = None
    for run in range(n_init):
        result = _lloyd(points, rng.choice(n, size=k_clusters, replace=False), max_iters)
        if best is None or result.inertia < best.inertia:
            best = result
        if n_init > 1:
            logger.debug(f'kmeans run {run + 1}/{n_init}: inertia={result.inertia:.6g}')
    return best


def _lloyd(points: np.ndarray, init: np.ndarray, max_iters: int) -> ClusterResult:
    n = points.shape[0]
    k_clusters = init.size
    centroids = points[init].copy()
    labels = np.full(n, -1, dtype=np.int64)
    history = []
    for it in range(max_iters):
        dist = cdist(points, centroids, 'sqeuclidean')
        new_labels = np.argmin(dist, axis=1)
        if it > 0:
            # on ties keep the current cluster
            keep = dist[np.arange(n), labels] <= dist[np.arange(n), new_labels]
            new_labels = np.where(keep, labels, new_labels)
        new_labels = _reseed_empty(points, centroids, new_labels, dist, k_clusters)
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        centroids = np.stack([points[labels == c].mean(axis=0) for c in range(k_clusters)])
        history.append(float(np.sum((points - centroids[labels]) ** 2)))
        logger.debug(f'kmeans iter {it}: inertia={history[-1]:.6g}')
        if stable:
            break
    return ClusterResult(centroids, tuple(int(x) for x in labels), tuple(history))


def _reseed_empty(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray,
                  dist: np.ndarray, k_clusters: int) -> np.ndarray:
    labels = labels.copy()
    for c in range(k_clusters):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k_clusters)
        movable = sizes[labels] > 1
        own = dist[np.arange(len(points)), labels]
        far = int(np.argmax(np.where(movable, own, -1.0)))
        labels[far] = c
        centroids[c] = points[far]
        logger.debug(f'kmeans: cluster {c} empty, reseeded with point {far}')
    return labels


def sentence_vectors(model: LdaModel, corpus: Corpus, sweeps: int = DEFAULT_FOLD_IN_SWEEPS) -> np.ndarray:
    rng = np.random.default_rng(model.rng_seed)
    return np.stack([model.fold_in(sentence, sweeps, rng) for _, _, sentence in corpus.iter_sentences()])


def cluster_sentences(model: LdaModel, corpus: Corpus, k_clusters: int, max_iters: int = 100,
                      seed: int = 0, fold_in_sweeps: int = DEFAULT_FOLD_IN_SWEEPS,
                      n_init: int = 1) -> ClusterResult:
    if k_clusters > corpus.num_sentences:
        raise ClusteringError(f'k_clusters={k_clusters} exceeds {corpus.num_sentences} sentences')
    return lloyd_kmeans(sentence_vectors(model, corpus, fold_in_sweeps), k_clusters, max_iters, seed, n_init)


@dataclass(frozen=True)
class TopicConfig:
    num_topics: int = DEFAULT_NUM_TOPICS
    iterations: int = DEFAULT_ITERATIONS
    doc_topic_prior: float = DEFAULT_DOC_TOPIC_PRIOR
    topic_word_prior: float = DEFAULT_TOPIC_WORD_PRIOR
    fold_in_sweeps: int = DEFAULT_FOLD_IN_SWEEPS
    k_clusters: Optional[int] = None   # None: min(num_topics, sentences)
    kmeans_max_iters: int = 100
    kmeans_n_init: int = DEFAULT_KMEANS_N_INIT
    seed: int = 0


@dataclass(frozen=True)
class AnnotatedCorpus:
    corpus: Corpus
    sentence_topics: Tuple[int, ...]
    model: Optional[LdaModel] = None

    def topic_of(self, doc_index: int, sentence_index: int) -> int:
        offset = sum(len(d.sentences) for d in self.corpus.documents[:doc_index])
        return self.sentence_topics[offset + sentence_index]


def preprocess(corpus: Corpus, config: TopicConfig = TopicConfig()) -> AnnotatedCorpus:
    model = lda_train(corpus, config.num_topics, config.iterations, config.seed,
                      config.doc_topic_prior, config.topic_word_prior)
    k_clusters = config.k_clusters or min(config.num_topics, corpus.num_sentences)
    clusters = cluster_sentences(model, corpus, k_clusters, config.kmeans_max_iters,
                                 config.seed, config.fold_in_sweeps, config.kmeans_n_init)
    sizes = np.bincount(clusters.labels, minlength=k_clusters).tolist()
    logger.info(f'preprocess: {corpus.num_sentences} sentences in {k_clusters} topic clusters, sizes={sizes}')
    return AnnotatedCorpus(corpus, clusters.labels, model)


def purity(labels: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of items whose cluster's majority true label matches their own."""
    labels_arr = np.asarray(labels)
    truth_arr = np.asarray(truth)
    hits = 0
    for c in np.unique(labels_arr):
        hits += np.bincount(truth_arr[labels_arr == c]).max()
    return hits / len(labels_arr)
