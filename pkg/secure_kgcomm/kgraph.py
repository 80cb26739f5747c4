"""
Knowledge-graph extraction: a per-token log-linear entity tagger, KB entity
alignment, PPMI word embeddings, the relation word graph and a
frequency-personalized PageRank used to keep the most central nodes.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from .corpus import Corpus, tokenize
from .errors import ConvergenceError, EmbeddingError, GraphError, TaggerError, ZeroVector
from .kb import KnowledgeBase, display_name, one_hop
from .logger import logger
from .topics import AnnotatedCorpus

PathLike = Union[str, Path]
Triple = Tuple[str, str, str]

B_ENT = 'B-ENT'
I_ENT = 'I-ENT'
O = 'O'
LABELS = (B_ENT, I_ENT, O)   # argmax ties resolve in this order
RELATED_TO = 'related_to'

DEFAULT_SIM_THRESHOLD = 0.5
DEFAULT_DAMPING = 0.85
DEFAULT_TOP_K = 20
_MAX_ALIAS_TOKENS = 6


def token_features(tokens: Sequence[str], i: int) -> List[str]:
    token = tokens[i]
    feats = ['bias', f'w={token}', f'lw={token.lower()}']
    if token[:1].isupper():
        feats.append('cap')
    if token.isdigit():
        feats.append('digit')
    if i > 0:
        feats.append(f'prev={tokens[i - 1].lower()}')
        if tokens[i - 1][:1].isupper():
            feats.append('prev_cap')
    else:
        feats.append('prev=<s>')
    feats.append(f'next={tokens[i + 1].lower()}' if i + 1 < len(tokens) else 'next=</s>')
    return feats


@dataclass
class TaggerModel:
    feature_index: Dict[str, int]
    weights: np.ndarray   # (num_features, len(LABELS))
    label_set: Tuple[str, ...] = LABELS

    def scores(self, tokens: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(tokens), len(self.label_set)))
        for i in range(len(tokens)):
            ids = [self.feature_index[f] for f in token_features(tokens, i) if f in self.feature_index]
            if ids:
                out[i] = self.weights[ids].sum(axis=0)
        return out

    def probabilities(self, tokens: Sequence[str]) -> np.ndarray:
        s = self.scores(tokens)
        s = np.exp(s - s.max(axis=1, keepdims=True))
        return s / s.sum(axis=1, keepdims=True)


def tagger_train(labeled: Sequence[Tuple[Sequence[str], Sequence[str]]], epochs: int = 10,
                 learn_rate: float = 0.1, l2: float = 1e-4, seed: int = 0) -> TaggerModel:
    """
    Stochastic gradient ascent on the per-token conditional log-likelihood
    with an L2 penalty applied to the weights touched by each update.
    """
    if not labeled:
        raise TaggerError('empty training set')
    label_id = {label: i for i, label in enumerate(LABELS)}
    feature_index: Dict[str, int] = {}
    instances: List[Tuple[np.ndarray, int]] = []
    for n, (tokens, labels) in enumerate(labeled):
        if len(tokens) != len(labels):
            raise TaggerError(f'sequence {n}: {len(tokens)} tokens but {len(labels)} labels')
        for i, label in enumerate(labels):
            if label not in label_id:
                raise TaggerError(f'sequence {n}: unknown label {label!r}')
            ids = [feature_index.setdefault(f, len(feature_index)) for f in token_features(tokens, i)]
            instances.append((np.asarray(ids, dtype=np.int64), label_id[label]))
    if not instances:
        raise TaggerError('training set has no tokens')
    weights = np.zeros((len(feature_index), len(LABELS)))
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        log_lik = 0.0
        for n in rng.permutation(len(instances)):
            ids, y = instances[n]
            s = weights[ids].sum(axis=0)
            p = np.exp(s - s.max())
            p /= p.sum()
            log_lik += math.log(max(p[y], 1e-300))
            grad = -p
            grad[y] += 1.0
            weights[ids] *= 1.0 - learn_rate * l2
            weights[ids] += learn_rate * grad
        logger.debug(f'tagger epoch {epoch + 1}/{epochs}: mean log-likelihood {log_lik / len(instances):.4f}')
    logger.info(f'tagger: {len(instances)} tokens, {len(feature_index)} features, {epochs} epochs')
    return TaggerModel(feature_index, weights)


def tagger_predict(model: TaggerModel, tokens: Sequence[str]) -> List[str]:
    if not tokens:
        raise TaggerError('cannot tag an empty sequence')
    return [model.label_set[i] for i in np.argmax(model.scores(tokens), axis=1)]


def label_with_kb(tokens: Sequence[str], kb: KnowledgeBase) -> List[str]:
    """Silver B/I/O labels: greedy longest match of KB aliases."""
    labels = [O] * len(tokens)
    i = 0
    while i < len(tokens):
        for n in range(min(_MAX_ALIAS_TOKENS, len(tokens) - i), 0, -1):
            if kb.lookup(' '.join(tokens[i:i + n])) is not None:
                labels[i] = B_ENT
                labels[i + 1:i + n] = [I_ENT] * (n - 1)
                i += n
                break
        else:
            i += 1
    return labels


def spans_from_labels(tokens: Sequence[str], labels: Sequence[str]) -> List[str]:
    spans: List[List[str]] = []
    inside = False
    for token, label in zip(tokens, labels):
        if label == B_ENT or (label == I_ENT and not inside):
            spans.append([token])
            inside = True
        elif label == I_ENT:
            spans[-1].append(token)
        else:
            inside = False
    return [' '.join(span) for span in spans]


@dataclass(frozen=True)
class Entity:
    name: str
    surface: str
    in_kb: bool
    count: int = 1


def align_entities(spans: Iterable[str], kb: KnowledgeBase) -> List[Entity]:
    found: Dict[str, Entity] = {}
    for span in spans:
        canonical = kb.lookup(span)
        name = canonical if canonical is not None else '_'.join(span.split())
        prev = found.get(name)
        if prev is None:
            found[name] = Entity(name, span, canonical is not None)
        else:
            found[name] = Entity(name, prev.surface, prev.in_kb, prev.count + 1)
    return list(found.values())


@dataclass(frozen=True)
class EmbeddingTable:
    tokens: Tuple[str, ...]
    matrix: np.ndarray = field(compare=False)
    _index: Dict[str, int] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.tokens):
            raise EmbeddingError(f'matrix shape {self.matrix.shape} does not match {len(self.tokens)} tokens')
        if np.isnan(self.matrix).any():
            raise EmbeddingError('embedding table contains NaN')
        object.__setattr__(self, '_index', {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def from_dict(cls, vectors: Dict[str, Sequence[float]]) -> 'EmbeddingTable':
        tokens = tuple(vectors)
        return cls(tokens, np.asarray([vectors[t] for t in tokens], dtype=np.float64).reshape(len(tokens), -1))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    @property
    def vectors(self) -> Dict[str, np.ndarray]:
        return {t: self.matrix[i] for i, t in enumerate(self.tokens)}

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.matrix[self._index[token]]

    def vector_for(self, phrase: str) -> Optional[np.ndarray]:
        """Mean vector of the phrase's known tokens, None when none is known."""
        ids = [self._index[t] for t in tokenize(phrase) if t in self._index]
        if not ids:
            return None
        return self.matrix[ids].mean(axis=0)

    def equals(self, other: 'EmbeddingTable') -> bool:
        return self.tokens == other.tokens and np.array_equal(self.matrix, other.matrix)


def cooccurrence_counts(corpus: Corpus, window: int) -> np.ndarray:
    # a token sits inside its own window
    counts = np.zeros((corpus.vocab_size, corpus.vocab_size))
    for _, _, sentence in corpus.iter_sentences():
        ids = np.asarray(sentence, dtype=np.int64)
        n = ids.size
        for off in range(-window, window + 1):
            if abs(off) >= n:
                continue
            a = ids[max(0, -off):n - max(0, off)]
            b = ids[max(0, off):n - max(0, -off)]
            np.add.at(counts, (a, b), 1.0)
    return counts


def ppmi(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    rows = counts.sum(axis=1, keepdims=True)
    cols = counts.sum(axis=0, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        pmi = np.log(counts * total / (rows * cols))
    pmi[~np.isfinite(pmi)] = 0.0
    return np.maximum(pmi, 0.0)


def build_embeddings(corpus: Corpus, window: int = 2, dimension: Optional[int] = None) -> EmbeddingTable:
    if corpus.vocab_size == 0:
        raise EmbeddingError('empty corpus')
    if window < 1:
        raise EmbeddingError(f'window must be >= 1, got {window}')
    if dimension is not None and not 1 <= dimension <= corpus.vocab_size:
        raise EmbeddingError(f'dimension {dimension} exceeds vocabulary size {corpus.vocab_size}')
    matrix = ppmi(cooccurrence_counts(corpus, window))
    if dimension is not None and dimension < corpus.vocab_size:
        u, s, _ = np.linalg.svd(matrix)
        matrix = u[:, :dimension] * s[:dimension]
        # fix each column's sign so its largest entry is positive
        signs = np.sign(matrix[np.argmax(np.abs(matrix), axis=0), np.arange(dimension)])
        matrix = matrix * np.where(signs == 0, 1.0, signs)
    logger.info(f'embeddings: vocab={corpus.vocab_size}, window={window}, dimension={matrix.shape[1]}')
    return EmbeddingTable(tuple(corpus.vocabulary.id_to_token), matrix)


def load_embeddings(path: PathLike) -> EmbeddingTable:
    tokens = []
    rows = []
    with open(path, encoding='utf-8') as fin:
        for line_no, line in enumerate(fin, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                values = [float(x) for x in parts[1:]]
            except ValueError as ex:
                raise EmbeddingError(f'{path} line {line_no}: {ex}') from ex
            if rows and len(values) != len(rows[0]):
                raise EmbeddingError(f'{path} line {line_no}: expected {len(rows[0])} values, got {len(values)}')
            tokens.append(parts[0])
            rows.append(values)
    if not rows or not rows[0]:
        raise EmbeddingError(f'{path} holds no vectors')
    logger.info(f'loaded {len(tokens)} embeddings of dimension {len(rows[0])} from {path}')
    return EmbeddingTable(tuple(tokens), np.asarray(rows, dtype=np.float64))


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise EmbeddingError(f'dimension mismatch: {va.shape} vs {vb.shape}')
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise ZeroVector('cosine similarity of a zero vector')
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


class RelationWordGraph:
    """Entity and expansion nodes with labeled, weighted, directed edges."""

    def __init__(self):
        self.graph = nx.MultiDiGraph()

    def add_node(self, name: str, freq: int, in_kb: bool = True, mentioned: bool = True) -> None:
        if freq < 1:
            raise GraphError(f'node {name}: frequency must be >= 1')
        self.graph.add_node(name, freq=freq, in_kb=in_kb, mentioned=mentioned)

    def add_edge(self, head: str, tail: str, label: str, weight: float) -> None:
        if weight < 0:
            raise GraphError(f'edge {head}->{tail}: negative weight {weight}')
        self.graph.add_edge(head, tail, key=label, weight=float(weight))

    def __contains__(self, name: str) -> bool:
        return name in self.graph

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def eta(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def nodes(self) -> List[str]:
        return sorted(self.graph.nodes)

    @property
    def node_freq(self) -> Dict[str, int]:
        return dict(self.graph.nodes(data='freq'))

    @property
    def edges(self) -> List[Tuple[str, str, str, float]]:
        return sorted((u, v, k, w) for u, v, k, w in self.graph.edges(keys=True, data='weight'))

    def edge_weight(self, head: str, tail: str) -> float:
        """Weight of head -> tail, parallel edges summed."""
        data = self.graph.get_edge_data(head, tail) or {}
        return sum(attrs['weight'] for attrs in data.values())


def build_relation_graph(entities: Sequence[Entity], embeddings: EmbeddingTable, kb: KnowledgeBase,
                         sim_threshold: float = DEFAULT_SIM_THRESHOLD) -> RelationWordGraph:
    if not entities:
        raise GraphError('no entities to build a relation graph from')
    if not 0 < sim_threshold <= 1:
        raise GraphError(f'sim_threshold must be in (0, 1], got {sim_threshold}')
    g = RelationWordGraph()
    surface: Dict[str, str] = {}
    for entity in entities:
        g.add_node(entity.name, entity.count, entity.in_kb)
        surface[entity.name] = entity.surface
    for entity in entities:
        if not entity.in_kb:
            continue
        for neighbor, _ in one_hop(kb, entity.name):
            if neighbor not in g:
                g.add_node(neighbor, 1, True, mentioned=False)
                surface[neighbor] = display_name(neighbor)
    names = g.nodes
    linked: Set[Tuple[str, str]] = set()
    for u in names:
        for v in names:
            for relation in kb.relations_between(u, v):
                g.add_edge(u, v, relation, 1.0)
                linked.add((min(u, v), max(u, v)))
    mentioned = {e.name for e in entities}
    for i, u in enumerate(names):
        vu = embeddings.vector_for(surface[u])
        if vu is None:
            continue
        for v in names[i + 1:]:
            if (u, v) in linked or (u not in mentioned and v not in mentioned):
                continue
            vv = embeddings.vector_for(surface[v])
            if vv is None:
                continue
            try:
                mu = cosine_similarity(vu, vv)
            except ZeroVector:
                continue
            if mu >= sim_threshold:
                g.add_edge(u, v, RELATED_TO, mu)
    return g


def pagerank(graph: RelationWordGraph, damping: float = DEFAULT_DAMPING, tol: float = 1e-10,
             max_iters: int = 1000) -> Dict[str, float]:
    """
    PR(j) = (1 - a) p(j) + a sum_i PR(i) W_ij with p proportional to node
    frequency and W the out-weight-normalized transition matrix. Dangling
    mass is redistributed along p.
    """
    if not 0 < damping < 1:
        raise GraphError(f'damping must be in (0, 1), got {damping}')
    if len(graph) == 0:
        raise GraphError('empty graph')
    nodelist = graph.nodes
    freq = np.asarray([graph.graph.nodes[n]['freq'] for n in nodelist], dtype=np.float64)
    p = freq / freq.sum()
    w = nx.to_scipy_sparse_array(graph.graph, nodelist=nodelist, weight='weight', format='csr')
    out_weight = np.asarray(w.sum(axis=1)).ravel()
    dangling = out_weight == 0
    scale = np.divide(1.0, out_weight, out=np.zeros_like(out_weight), where=~dangling)
    w_t = w.T.tocsr()
    x = p.copy()
    for it in range(max_iters):
        x_next = (1 - damping) * p + damping * (w_t @ (x * scale) + x[dangling].sum() * p)
        x_next /= x_next.sum()
        err = np.abs(x_next - x).sum()
        x = x_next
        if err < tol:
            logger.debug(f'pagerank converged after {it + 1} iterations on {len(nodelist)} nodes')
            return dict(zip(nodelist, x.tolist()))
    raise ConvergenceError(f'pagerank did not converge in {max_iters} iterations',
                           dict(zip(nodelist, x.tolist())))


@dataclass(frozen=True)
class KnowledgeGraph:
    triples: Tuple[Triple, ...] = ()
    rank: Dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'triples', tuple(sorted(set(tuple(t) for t in self.triples))))

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def nodes(self) -> List[str]:
        return sorted({n for h, _, t in self.triples for n in (h, t)})


def extract_sentence(tokens: Sequence[str], tagger: TaggerModel, embeddings: EmbeddingTable,
                     kb: KnowledgeBase, top_k: int = DEFAULT_TOP_K,
                     sim_threshold: float = DEFAULT_SIM_THRESHOLD,
                     damping: float = DEFAULT_DAMPING) -> Tuple[List[Triple], Dict[str, float]]:
    spans = spans_from_labels(tokens, tagger_predict(tagger, tokens))
    if not spans:
        return [], {}
    graph = build_relation_graph(align_entities(spans, kb), embeddings, kb, sim_threshold)
    rank = pagerank(graph, damping)
    top = set(sorted(rank, key=lambda n: (-rank[n], n))[:top_k])
    triples = [(u, label, v) for u, v, label, _ in graph.edges if u in top and v in top]
    return triples, rank


def extract(annotated: AnnotatedCorpus, tagger: TaggerModel, embeddings: EmbeddingTable, kb: KnowledgeBase,
            top_k: int = DEFAULT_TOP_K, sim_threshold: float = DEFAULT_SIM_THRESHOLD,
            damping: float = DEFAULT_DAMPING, documents: Optional[Iterable[int]] = None,
            topic: Optional[int] = None) -> KnowledgeGraph:
    doc_filter = set(documents) if documents is not None else None
    triples: List[Triple] = []
    rank: Dict[str, float] = {}
    for n, (di, si, _) in enumerate(annotated.corpus.iter_sentences()):
        if doc_filter is not None and di not in doc_filter:
            continue
        if topic is not None and annotated.sentence_topics[n] != topic:
            continue
        tokens = annotated.corpus.documents[di].surface[si]
        sentence_triples, sentence_rank = extract_sentence(tokens, tagger, embeddings, kb, top_k,
                                                           sim_threshold, damping)
        triples.extend(sentence_triples)
        for node, score in sentence_rank.items():
            rank[node] = rank.get(node, 0.0) + score
    total = sum(rank.values())
    g = KnowledgeGraph(tuple(triples), {n: s / total for n, s in sorted(rank.items())} if total > 0 else {})
    logger.debug(f'extract: {len(g.triples)} triples over {len(g.rank)} ranked nodes')
    return g


def train_tagger_from_kb(corpus: Corpus, kb: KnowledgeBase, epochs: int = 10, learn_rate: float = 0.1,
                         l2: float = 1e-4, seed: int = 0) -> TaggerModel:
    labeled = [(doc.surface[si], label_with_kb(doc.surface[si], kb))
               for doc in corpus.documents for si in range(len(doc.sentences))]
    return tagger_train(labeled, epochs, learn_rate, l2, seed)
