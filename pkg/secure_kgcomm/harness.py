"""
End-to-end experiment runner.

The sender side (topics, tagger, embeddings, extraction, framing, encryption)
is deterministic, so it runs once. Each (snr, trial) then pushes every
document frame through the channel to the legitimate receiver and to every
eavesdropper strategy. Trials run in a worker pool of threads; rows are
sorted before they are written, so the CSV does not depend on scheduling.
"""
import asyncio
import csv
import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.stats import spearmanr

from .adversary import Strategy, eavesdrop, parse_strategy
from .chaoskey import ChaosKey, Keystream, generate_keystream, keyspace_bits, load_key
from .channel import equalize, noise_variance, transmit
from .cipher import CipherText, decrypt, encrypt
from .config import ExperimentConfig
from .corpus import Corpus, load_corpus, load_reference_pairs
from .errors import ConfigError, DeepFade, DecodeFailure, KgCommError
from .kb import KnowledgeBase, load_kb
from .kgraph import (EmbeddingTable, KnowledgeGraph, TaggerModel, build_embeddings, extract,
                     load_embeddings, train_tagger_from_kb)
from .log_util import Fore
from .logger import logger
from .metrics import (TripleScores, bleu, decryption_bit_length, detection_failure_probability,
                      symbol_error_rate, triple_scores)
from .recovery import realize
from .topics import AnnotatedCorpus, preprocess
from .wire import (BitStream, SymbolFrame, deserialize_kg, frame_bits, qpsk_demodulate, serialize_kg,
                   unframe_bits)

try:
    from asyncio import to_thread  # python 3.9 introduced to_thread
except ImportError:
    import functools
    import contextvars

    async def to_thread(func, /, *args, **kwargs):
        loop = asyncio.get_running_loop()
        ctx = contextvars.copy_context()
        func_call = functools.partial(ctx.run, func, *args, **kwargs)
        return await loop.run_in_executor(None, func_call)


PathLike = Union[str, Path]
T = TypeVar('T')
_U64 = (1 << 64) - 1

REPORT_COLUMNS = (
    'snr_db', 'trial', 'strategy', 'trial_seed', 'frames', 'frame_drops', 'decode_failures',
    'bleu_legitimate', 'bleu_legitimate_text', 'bleu_eavesdropper', 'symbol_error_rate',
    'kg_bits', 'raw_bits', 'dfp_dep', 'dfp_freq', 'p_fail', 'decryption_bit_length', 'error',
)
DFP_COLUMNS = ('source', 'ratio', 'dep', 'freq', 'delta_i', 'delta_all', 'p_fail')
BIT_LENGTH_COLUMNS = ('snr_db', 'sigma', 'keyspace_bits', 'delta', 'decryption_bit_length')
SUMMARY_COLUMNS = ('snr_db', 'strategy', 'trials', 'bleu_legitimate', 'bleu_eavesdropper',
                   'symbol_error_rate', 'frame_drops')


def split_seed(*parts: int) -> int:
    """First 8 bytes, big-endian, of BLAKE2b over the parts packed as unsigned 64-bit big-endian."""
    digest = hashlib.blake2b(struct.pack(f'>{len(parts)}Q', *(p & _U64 for p in parts))).digest()
    return int.from_bytes(digest[:8], 'big')


def trial_seed(master_seed: int, snr_index: int, trial_index: int) -> int:
    return split_seed(master_seed, snr_index, trial_index)


def document_seed(seed: int, doc_index: int) -> int:
    return split_seed(seed, doc_index)


@dataclass(frozen=True, eq=False)
class Transmission:
    doc_index: int
    graph: KnowledgeGraph
    reference: str      # realize() of the sent graph
    source_text: str
    sent_bits: BitStream    # after block padding
    frame: SymbolFrame
    ciphertext: CipherText
    keystream: Optional[Keystream]
    nonce: int = 0      # public, selects the keystream orbit for this frame


@dataclass(eq=False)
class SenderState:
    corpus: Corpus
    kb: KnowledgeBase
    key: ChaosKey
    annotated: AnnotatedCorpus
    tagger: TaggerModel
    embeddings: EmbeddingTable
    graphs: List[KnowledgeGraph]
    transmissions: List[Transmission]
    extraction_scores: Optional[TripleScores] = None

    @property
    def kg_bits(self) -> int:
        return sum(len(serialize_kg(t.graph)) for t in self.transmissions)

    @property
    def raw_bits(self) -> int:
        return sum(8 * len(self.corpus.documents[t.doc_index].raw_text.encode('utf-8'))
                   for t in self.transmissions)


def _read_input(what: str, loader: Callable[[PathLike], T], path: PathLike) -> T:
    try:
        return loader(path)
    except OSError as ex:
        raise ConfigError(f'cannot read {what} {path}: {ex.strerror}') from ex


def build_sender(cfg: ExperimentConfig) -> SenderState:
    corpus = _read_input('corpus', load_corpus, cfg.paths.corpus)
    kb = _read_input('kb', load_kb, cfg.paths.kb)
    key = _read_input('key', load_key, cfg.paths.key)
    pairs = _read_input('pairs', load_reference_pairs, cfg.paths.pairs) if cfg.paths.pairs is not None else None
    if cfg.paths.embeddings is not None:
        embeddings = _read_input('embeddings', load_embeddings, cfg.paths.embeddings)
    else:
        embeddings = build_embeddings(corpus, cfg.embeddings.window, cfg.embeddings.dimension)
    annotated = preprocess(corpus, cfg.topics)
    tagger = train_tagger_from_kb(corpus, kb, cfg.tagger.epochs, cfg.tagger.learn_rate,
                                  cfg.tagger.l2, cfg.tagger.seed)
    ex = cfg.extraction
    graphs = [extract(annotated, tagger, embeddings, kb, ex.top_k, ex.sim_threshold, ex.damping, documents=[di])
              for di in range(len(corpus.documents))]
    transmissions = []
    for di, g in enumerate(graphs):
        if not g.triples:
            logger.warning(f'document {di}: nothing extracted, not transmitted')
            continue
        bits = serialize_kg(g)
        frame = frame_bits(bits, cfg.frame.block_N, cfg.frame.per_packet_X)
        if cfg.run.encryption:
            nonce = document_seed(cfg.run.master_seed, di)
            ks = generate_keystream(key, frame.packets.size, frame.num_packets, nonce)
            ct = encrypt(frame, ks, key.varpi)
        else:
            nonce, ks = 0, None
            ct = CipherText(frame, ())
        transmissions.append(Transmission(di, g, realize(g, kb), corpus.documents[di].raw_text,
                                          bits.padded_to(2 * cfg.frame.block_N), frame, ct, ks, nonce))
    scores = None
    if pairs is not None:
        predicted = [t for g in graphs for t in g.triples]
        scores = triple_scores(predicted, [t for p in pairs for t in p.triples])
        logger.info(f'extraction vs reference triples: precision={scores.precision:.3f} '
                    f'recall={scores.recall:.3f} f1={scores.f1:.3f}')
    logger.info(f'sender: {len(transmissions)}/{len(graphs)} documents framed, '
                f'{sum(len(t.graph) for t in transmissions)} triples, encryption={cfg.run.encryption}')
    return SenderState(corpus, kb, key, annotated, tagger, embeddings, graphs, transmissions, scores)


@dataclass
class ReportRow:
    snr_db: float
    trial: int
    strategy: str
    trial_seed: int
    frames: int = 0
    frame_drops: int = 0
    decode_failures: int = 0
    bleu_legitimate: Optional[float] = None
    bleu_legitimate_text: Optional[float] = None
    bleu_eavesdropper: Optional[float] = None
    symbol_error_rate: Optional[float] = None
    kg_bits: int = 0
    raw_bits: int = 0
    dfp_dep: Optional[float] = None
    dfp_freq: Optional[float] = None
    p_fail: Optional[float] = None
    decryption_bit_length: Optional[int] = None
    error: str = ''

    @property
    def sort_key(self) -> Tuple[float, int, str]:
        return (self.snr_db, self.trial, self.strategy)

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in REPORT_COLUMNS}


@dataclass
class ExperimentReport:
    rows: List[ReportRow] = field(default_factory=list)

    def sorted(self) -> 'ExperimentReport':
        return ExperimentReport(sorted(self.rows, key=lambda r: r.sort_key))

    def write_csv(self, path: PathLike) -> None:
        write_csv(path, REPORT_COLUMNS, [r.as_dict() for r in self.rows])


def _format(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return f'{value:.6f}'
    return str(value)


def write_csv(path: PathLike, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fout:
        writer = csv.writer(fout, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row.get(c)) for c in columns])
    logger.info(f'wrote {len(rows)} rows to {path}')


@dataclass
class _Received:
    bleu: float = 0.0
    bleu_text: float = 0.0
    ser: float = 1.0
    dropped: bool = False
    decode_failed: bool = False
    error: str = ''


def receive_legitimate(t: Transmission, received: np.ndarray, h: complex, sender: SenderState,
                       csi: str) -> _Received:
    out = _Received()
    try:
        packets = equalize(received, h, csi).reshape(t.frame.packets.shape)
    except DeepFade as ex:
        out.dropped = True
        out.error = f'doc {t.doc_index}: {ex}'
        return out
    if t.keystream is not None:
        packets = decrypt(CipherText(t.frame.with_packets(packets), t.ciphertext.params_per_packet),
                          t.keystream, sender.key.varpi).packets
    data = packets.ravel()[:t.frame.num_symbols]
    out.ser = symbol_error_rate(t.sent_bits.bits, qpsk_demodulate(data).bits)
    try:
        g = deserialize_kg(unframe_bits(data, t.frame))
    except DecodeFailure as ex:
        out.decode_failed = True
        out.error = f'doc {t.doc_index}: {ex}'
        return out
    text = realize(g, sender.kb)
    out.bleu = bleu(text, t.reference)
    out.bleu_text = bleu(text, t.source_text)
    return out


def run_trial(cfg: ExperimentConfig, sender: SenderState, snr_index: int, trial_index: int,
              strategies: Sequence[Strategy]) -> List[ReportRow]:
    snr_db = float(cfg.channel.snr_db[snr_index])
    seed = trial_seed(cfg.run.master_seed, snr_index, trial_index)
    legit: List[_Received] = []
    eaves: Dict[str, List[float]] = {str(s): [] for s in strategies}
    errors: List[str] = []
    for t in sender.transmissions:
        channel = cfg.channel.at(snr_db, document_seed(seed, t.doc_index))
        try:
            received, h = transmit(t.ciphertext.frame.packets.ravel(), channel)
            result = receive_legitimate(t, received, h, sender, channel.csi)
        except KgCommError as ex:
            errors.append(f'doc {t.doc_index}: {ex!r}')
            continue
        legit.append(result)
        if result.error:
            errors.append(result.error)
        for s in strategies:
            text = eavesdrop(received, h, s, t.frame, cfg.security.burn_in, t.nonce)
            eaves[str(s)].append(bleu(text, t.reference))
    kg_bits = sender.kg_bits
    raw_bits = sender.raw_bits
    dep = cfg.dfp.dep[0]
    p_fail = None
    if kg_bits and raw_bits:
        p_fail = detection_failure_probability(dep, kg_bits, raw_bits * cfg.dfp.covert_rate, cfg.dfp.freq)
    bit_length = decryption_bit_length(keyspace_bits(cfg.security.key_format), cfg.security.delta,
                                       math.sqrt(noise_variance(snr_db)))
    rows = []
    for s in strategies:
        rows.append(ReportRow(
            snr_db, trial_index, str(s), seed,
            frames=len(sender.transmissions),
            frame_drops=sum(r.dropped for r in legit),
            decode_failures=sum(r.decode_failed for r in legit),
            bleu_legitimate=_mean([r.bleu for r in legit]),
            bleu_legitimate_text=_mean([r.bleu_text for r in legit]),
            bleu_eavesdropper=_mean(eaves[str(s)]),
            symbol_error_rate=_mean([r.ser for r in legit if not r.dropped]),
            kg_bits=kg_bits, raw_bits=raw_bits, dfp_dep=dep, dfp_freq=cfg.dfp.freq, p_fail=p_fail,
            decryption_bit_length=bit_length, error='; '.join(errors)))
    return rows


def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if len(values) else None


async def _run_pool(cfg: ExperimentConfig, sender: SenderState, strategies: Sequence[Strategy]) -> List[ReportRow]:
    semaphore = asyncio.Semaphore(cfg.run.workers)
    jobs = [(si, ti) for si in range(len(cfg.channel.snr_db)) for ti in range(cfg.run.trials)]

    async def worker(si: int, ti: int) -> List[ReportRow]:
        async with semaphore:
            return await to_thread(run_trial, cfg, sender, si, ti, strategies)

    tasks = [asyncio.create_task(worker(si, ti), name=f'snr{si}-trial{ti}') for si, ti in jobs]
    results = await asyncio.gather(*tasks, return_exceptions=True)
    rows: List[ReportRow] = []
    for (si, ti), task, result in zip(jobs, tasks, results):
        if isinstance(result, Exception):
            logger.error(f'task: {Fore.Green}{task.get_name()}{Fore.Reset} gets an exception: '
                         f'{Fore.Magenta}{result!r}{Fore.Reset}')
            seed = trial_seed(cfg.run.master_seed, si, ti)
            rows.extend(ReportRow(float(cfg.channel.snr_db[si]), ti, str(s), seed, error=repr(result))
                        for s in strategies)
        else:
            logger.debug(f'task: {Fore.Green}{task.get_name()}{Fore.Reset} returns {len(result)} rows')
            rows.extend(result)
    return rows


def run_pipeline(cfg: ExperimentConfig, sender: Optional[SenderState] = None,
                 write: bool = True) -> ExperimentReport:
    strategies = [parse_strategy(s) for s in cfg.run.strategies]
    sender = sender or build_sender(cfg)
    logger.info(f'run: {len(cfg.channel.snr_db)} SNRs x {cfg.run.trials} trials, '
                f'{len(strategies)} strategies, {cfg.run.workers} workers, master seed {cfg.run.master_seed}')
    report = ExperimentReport(asyncio.run(_run_pool(cfg, sender, strategies))).sorted()
    if write:
        report.write_csv(cfg.paths.output)
    return report


def sweep_compression_dfp(cfg: ExperimentConfig, sender: Optional[SenderState] = None) -> List[Dict[str, Any]]:
    """P_fail over the measured compression ratio and every configured ratio, for each DEP."""
    sender = sender or build_sender(cfg)
    raw_bits = sender.raw_bits
    if raw_bits == 0:
        raise KgCommError('nothing was transmitted, compression ratio undefined')
    delta_all = raw_bits * cfg.dfp.covert_rate
    ratios = [('measured', sender.kg_bits / raw_bits)] + [('configured', float(r)) for r in cfg.dfp.ratios]
    rows = []
    for source, ratio in ratios:
        for dep in cfg.dfp.dep:
            delta_i = ratio * raw_bits
            rows.append({'source': source, 'ratio': ratio, 'dep': float(dep), 'freq': float(cfg.dfp.freq),
                         'delta_i': float(delta_i), 'delta_all': float(delta_all),
                         'p_fail': detection_failure_probability(dep, delta_i, delta_all, cfg.dfp.freq)})
    logger.info(f'sweep-dfp: measured ratio {ratios[0][1]:.4f}, {len(rows)} rows')
    return rows


def sweep_bit_length(cfg: ExperimentConfig) -> List[Dict[str, Any]]:
    bits = keyspace_bits(cfg.security.key_format)
    rows = []
    for snr_db in cfg.channel.snr_db:
        sigma = math.sqrt(noise_variance(snr_db))
        rows.append({'snr_db': float(snr_db), 'sigma': sigma, 'keyspace_bits': bits, 'delta': cfg.security.delta,
                     'decryption_bit_length': decryption_bit_length(bits, cfg.security.delta, sigma)})
    return rows


@dataclass
class Summary:
    rows: List[Dict[str, Any]]
    spearman: Optional[float]


def summarize(report: ExperimentReport) -> Summary:
    groups: Dict[Tuple[float, str], List[ReportRow]] = {}
    for row in report.rows:
        groups.setdefault((row.snr_db, row.strategy), []).append(row)
    rows = []
    for (snr_db, strategy), members in sorted(groups.items()):
        rows.append({
            'snr_db': snr_db, 'strategy': strategy, 'trials': len(members),
            'bleu_legitimate': _mean([r.bleu_legitimate for r in members if r.bleu_legitimate is not None]),
            'bleu_eavesdropper': _mean([r.bleu_eavesdropper for r in members if r.bleu_eavesdropper is not None]),
            'symbol_error_rate': _mean([r.symbol_error_rate for r in members if r.symbol_error_rate is not None]),
            'frame_drops': sum(r.frame_drops for r in members),
        })
    per_snr: Dict[float, List[float]] = {}
    for row in report.rows:
        if row.bleu_legitimate is not None:
            per_snr.setdefault(row.snr_db, []).append(row.bleu_legitimate)
    spearman = None
    if len(per_snr) >= 2:
        snrs = sorted(per_snr)
        means = [float(np.mean(per_snr[s])) for s in snrs]
        # flat means count as non-decreasing
        spearman = float(spearmanr(snrs, means)[0]) if len(set(means)) > 1 else 1.0
        logger.info(f'spearman(legitimate BLEU, SNR) over {len(snrs)} SNRs: {spearman:.3f}')
    return Summary(rows, spearman)
