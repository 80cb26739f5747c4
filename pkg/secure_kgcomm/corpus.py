"""
Text corpora, the shared tokenizer and reference-pair fixtures.

Documents are blank-line separated blocks; sentences end at [.!?].
Tokens are lowercase runs of letters/digits, everything else is a boundary.
"""
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import EmptyCorpus, ParseError
from .logger import logger

PathLike = Union[str, Path]
Triple = Tuple[str, str, str]

_word_pattern = re.compile(r'[^\W_]+')
_sentence_end = re.compile(r'[.!?]+')
_doc_break = re.compile(r'\n[ \t\r\f\v]*\n')


def surface_tokens(text: str) -> List[str]:
    """Tokens with their original case, used by the entity tagger."""
    return _word_pattern.findall(text)


def tokenize(text: str) -> List[str]:
    return [token.lower() for token in _word_pattern.findall(text)]


def split_sentences(text: str) -> List[str]:
    return [s.strip() for s in _sentence_end.split(text) if s.strip()]


class Vocabulary:
    """Bijection token <-> id, ids assigned in first-seen order."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.token_to_id: Dict[str, int] = {}
        self.id_to_token: List[str] = []
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        token_id = self.token_to_id.get(token)
        if token_id is None:
            token_id = len(self.id_to_token)
            self.token_to_id[token] = token_id
            self.id_to_token.append(token)
        return token_id

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id[token]

    def token_of(self, token_id: int) -> str:
        return self.id_to_token[token_id]


@dataclass(frozen=True)
class Document:
    doc_id: int
    sentences: Tuple[Tuple[int, ...], ...]
    raw_text: str
    # original-case tokens, aligned 1:1 with `sentences`
    surface: Tuple[Tuple[str, ...], ...] = ()

    @property
    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class Corpus:
    documents: Tuple[Document, ...]
    vocabulary: Vocabulary = field(compare=False)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def num_sentences(self) -> int:
        return sum(len(d.sentences) for d in self.documents)

    def iter_sentences(self) -> Iterable[Tuple[int, int, Tuple[int, ...]]]:
        """Yields (doc index, sentence index, token ids) in corpus order."""
        for di, doc in enumerate(self.documents):
            for si, sentence in enumerate(doc.sentences):
                yield di, si, sentence

    def sentence_text(self, doc_index: int, sentence_index: int) -> str:
        return ' '.join(self.documents[doc_index].surface[sentence_index])

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> 'Corpus':
        vocab = Vocabulary()
        documents = []
        for text in texts:
            sentences = []
            surface = []
            for sentence in split_sentences(text):
                tokens = surface_tokens(sentence)
                if not tokens:
                    continue
                surface.append(tuple(tokens))
                sentences.append(tuple(vocab.add(t.lower()) for t in tokens))
            if not sentences:
                continue
            documents.append(Document(len(documents), tuple(sentences), text, tuple(surface)))
        if not documents:
            raise EmptyCorpus('corpus contains no tokens')
        return cls(tuple(documents), vocab)


def load_corpus(path: PathLike) -> Corpus:
    text = Path(path).read_text(encoding='utf-8')
    blocks = [b.strip() for b in _doc_break.split(text) if b.strip()]
    if not blocks:
        raise EmptyCorpus(f'{path} is empty')
    corpus = Corpus.from_texts(blocks)
    logger.info(f'loaded corpus {path}: {len(corpus.documents)} documents, '
                f'{corpus.num_sentences} sentences, vocab_size={corpus.vocab_size}')
    return corpus


@dataclass(frozen=True)
class ReferencePair:
    triples: Tuple[Triple, ...]
    reference_text: str


def _parse_pair(line_no: int, line: str) -> ReferencePair:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as ex:
        raise ParseError(line_no, f'invalid JSON: {ex.msg}') from ex
    if not isinstance(obj, dict):
        raise ParseError(line_no, 'expected a JSON object')
    triples = obj.get('triples')
    text = obj.get('text')
    if not isinstance(text, str):
        raise ParseError(line_no, '"text" must be a string')
    if not isinstance(triples, list) or not triples:
        raise ParseError(line_no, '"triples" must be a non-empty array')
    parsed = []
    for triple in triples:
        if (not isinstance(triple, list) or len(triple) != 3
                or not all(isinstance(part, str) and part for part in triple)):
            raise ParseError(line_no, f'bad triple {triple!r}')
        parsed.append(tuple(triple))
    return ReferencePair(tuple(parsed), text)


def load_reference_pairs(path: PathLike) -> List[ReferencePair]:
    pairs = []
    with open(path, encoding='utf-8') as fin:
        for line_no, line in enumerate(fin, 1):
            if not line.strip():
                continue
            pairs.append(_parse_pair(line_no, line))
    logger.info(f'loaded {len(pairs)} reference pairs from {path}')
    return pairs
