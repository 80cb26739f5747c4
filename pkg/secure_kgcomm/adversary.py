"""
The eavesdropper: it sees the same received signal and knows h and the public
frame layout, but has neither the key nor the knowledge base.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .chaoskey import DEFAULT_BURN_IN, ChaosKey, generate_keystream
from .channel import CSI_PERFECT, equalize
from .cipher import CipherText, DiagonalCipher, decrypt
from .errors import KgCommError
from .kb import KnowledgeBase
from .logger import logger
from .recovery import realize
from .wire import SymbolFrame, deserialize_kg, unframe_bits

NO_KEY = 'no_key'
RANDOM_KEY = 'random_key'
DIAGONAL_ONLY = 'diagonal_only'


@dataclass(frozen=True)
class Strategy:
    name: str
    seed: int = 0

    def __post_init__(self):
        if self.name not in (NO_KEY, RANDOM_KEY, DIAGONAL_ONLY):
            raise ValueError(f'unknown eavesdrop strategy {self.name!r}')

    def __str__(self) -> str:
        return f'{self.name}:{self.seed}' if self.name == RANDOM_KEY else self.name


def parse_strategy(text: str) -> Strategy:
    """'no_key', 'diagonal_only', 'random_key' or 'random_key:<seed>'."""
    name, _, seed = text.strip().partition(':')
    return Strategy(name, int(seed) if seed else 0)


def recover_packets(received: Union[Sequence[complex], np.ndarray], h: complex, strategy: Strategy,
                    frame: SymbolFrame, burn_in: int = DEFAULT_BURN_IN, nonce: int = 0) -> np.ndarray:
    """Equalized packets after the strategy's unmixing; `nonce` is the frame's public keystream nonce."""
    packets = equalize(received, h, CSI_PERFECT).reshape(frame.packets.shape)
    if strategy.name == NO_KEY:
        return packets
    guess = ChaosKey.random(strategy.seed, burn_in)
    ks = generate_keystream(guess, frame.packets.size, frame.num_packets, nonce)
    if strategy.name == RANDOM_KEY:
        return decrypt(CipherText(frame.with_packets(packets), ()), ks, guess.varpi).packets
    # guessed amplitude diagonal, zeta taken as 0
    diag = DiagonalCipher.from_keystream(ks, guess.varpi, frame.packets.size, with_phase=False)
    return packets / diag.combined.reshape(packets.shape)


def eavesdrop(received: Union[Sequence[complex], np.ndarray], h: complex, strategy: Strategy,
              frame: SymbolFrame, burn_in: int = DEFAULT_BURN_IN, nonce: int = 0) -> str:
    """Best-effort text; every failure folds into ''."""
    try:
        packets = recover_packets(received, h, strategy, frame, burn_in, nonce)
        g = deserialize_kg(unframe_bits(packets.ravel(), frame))
    except KgCommError as ex:
        logger.debug(f'eavesdrop {strategy}: {ex!r}')
        return ''
    return realize(g, KnowledgeBase.empty())
