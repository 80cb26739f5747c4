"""
AWGN and slow Rayleigh fading: y = h * z + n with one h per frame.
SNR is relative to unit average symbol power.
"""
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, DeepFade

FADING_NONE = 'none'
FADING_RAYLEIGH = 'rayleigh'
CSI_PERFECT = 'perfect'
CSI_NONE = 'none'
DEEP_FADE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    fading: str = FADING_NONE
    fading_variance: float = 1.0
    seed: int = 0
    csi: str = CSI_PERFECT

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ConfigError(f'snr_db must be finite, got {self.snr_db}')
        if self.fading not in (FADING_NONE, FADING_RAYLEIGH):
            raise ConfigError(f'fading must be {FADING_NONE!r} or {FADING_RAYLEIGH!r}, got {self.fading!r}')
        if self.fading == FADING_RAYLEIGH and not self.fading_variance > 0:
            raise ConfigError(f'fading_variance must be positive, got {self.fading_variance}')
        if self.csi not in (CSI_PERFECT, CSI_NONE):
            raise ConfigError(f'csi must be {CSI_PERFECT!r} or {CSI_NONE!r}, got {self.csi!r}')

    @property
    def noise_variance(self) -> float:
        return noise_variance(self.snr_db)


def noise_variance(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def transmit(symbols: Union[Sequence[complex], np.ndarray], cfg: ChannelConfig) -> Tuple[np.ndarray, complex]:
    z = np.asarray(symbols, dtype=np.complex128).ravel()
    if z.size == 0:
        raise ValueError('nothing to transmit')
    rng = np.random.default_rng(cfg.seed)
    if cfg.fading == FADING_RAYLEIGH:
        h = complex(math.sqrt(cfg.fading_variance / 2) * (rng.standard_normal() + 1j * rng.standard_normal()))
    else:
        h = 1.0 + 0.0j
    std = math.sqrt(cfg.noise_variance / 2)
    noise = std * (rng.standard_normal(z.size) + 1j * rng.standard_normal(z.size))
    return h * z + noise, h


def equalize(received: Union[Sequence[complex], np.ndarray], h: complex, csi: str = CSI_PERFECT) -> np.ndarray:
    y = np.asarray(received, dtype=np.complex128)
    if csi == CSI_NONE:
        return y
    if csi != CSI_PERFECT:
        raise ConfigError(f'unknown csi mode {csi!r}')
    if abs(h) < DEEP_FADE_THRESHOLD:
        raise DeepFade(f'|h| = {abs(h):.3e} is below {DEEP_FADE_THRESHOLD}')
    return y / h


def qpsk_ber_theory(snr_db: float) -> float:
    """Uncoded Gray QPSK bit error rate over AWGN, Q(sqrt(SNR)) with SNR per symbol."""
    return float(norm.sf(math.sqrt(10.0 ** (snr_db / 10.0))))
