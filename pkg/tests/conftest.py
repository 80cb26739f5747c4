from pathlib import Path

import numpy as np
import pytest

import secure_kgcomm
from secure_kgcomm.chaoskey import ChaosKey
from secure_kgcomm.corpus import Corpus
from secure_kgcomm.kb import KnowledgeBase, load_kb

DATA_DIR = Path(secure_kgcomm.__file__).parent / 'data'

TOY_KB_TEXT = '''\
# toy knowledge base
#ENTITY
Alan_Turing\tTuring
London
United_Kingdom\tUK
Ada_Lovelace
Mathematics\tmaths
Bletchley_Park
Paris
France
Seine
Heathrow_Airport\tHeathrow
#RELATION
Alan_Turing\tborn_in\tLondon
Ada_Lovelace\tborn_in\tLondon
London\tcapital_of\tUnited_Kingdom
Ada_Lovelace\tfield\tMathematics
Paris\tcapital_of\tFrance
Seine\tflows_through\tParis
Heathrow_Airport\tcity_served\tLondon
Alan_Turing\tfield\tMathematics
#TEMPLATE
born_in\t{head} was born in {tail}.
capital_of\t{head} is the capital of {tail}.
field\t{head} worked in the field of {tail}.
flows_through\t{head} flows through {tail}.
city_served\t{head} serves the city of {tail}.
'''


@pytest.fixture(scope='session')
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope='session')
def fixture_kb() -> KnowledgeBase:
    return load_kb(DATA_DIR / 'kb.tsv')


@pytest.fixture
def toy_kb_path(tmp_path) -> Path:
    path = tmp_path / 'toy_kb.tsv'
    path.write_text(TOY_KB_TEXT, encoding='utf-8')
    return path


@pytest.fixture
def toy_kb(toy_kb_path) -> KnowledgeBase:
    return load_kb(toy_kb_path)


@pytest.fixture(scope='session')
def key() -> ChaosKey:
    return ChaosKey(0.3141592653589793, 0.2718281828459045, 0.8, 1000, 1.0)


def synthetic_topic_corpus(num_docs: int = 60, doc_len: int = 50, seed: int = 7):
    """3 disjoint 10-word vocabularies; every document is drawn from exactly one of them."""
    rng = np.random.default_rng(seed)
    vocabularies = [[f't{k}w{i}' for i in range(10)] for k in range(3)]
    texts = []
    truth = []
    for d in range(num_docs):
        topic = d % 3
        words = rng.choice(vocabularies[topic], size=doc_len)
        texts.append(' '.join(words) + '.')
        truth.append(topic)
    return Corpus.from_texts(texts), vocabularies, truth


def write_experiment(tmp_path: Path, **overrides: str) -> Path:
    """A small experiment config over the bundled data, written to tmp_path."""
    tables = {
        'paths': (f'corpus = "{(DATA_DIR / "corpus.txt").as_posix()}"\n'
                  f'kb = "{(DATA_DIR / "kb.tsv").as_posix()}"\n'
                  f'key = "{(DATA_DIR / "key.txt").as_posix()}"\n'
                  f'pairs = "{(DATA_DIR / "pairs.jsonl").as_posix()}"\n'
                  f'output = "{(tmp_path / "report.csv").as_posix()}"\n'),
        'channel': 'snr_db = [10.0, 30.0]\nfading = "none"\n',
        'run': 'trials = 2\nmaster_seed = 11\nstrategies = ["no_key", "random_key:3", "diagonal_only:3"]\nworkers = 2\n',
        'topics': 'num_topics = 3\niterations = 20\nfold_in_sweeps = 5\nseed = 1\n',
        'tagger': 'epochs = 5\nseed = 1\n',
    }
    tables.update(overrides)
    text = ''.join(f'[{name}]\n{body}\n' for name, body in tables.items() if body is not None)
    path = tmp_path / 'experiment.toml'
    path.write_text(text, encoding='utf-8')
    return path
