"""
Two-layer symbol encryption: a chaotic diagonal (amplitude and phase) on every
symbol, then a multi-parameter weighted fractional Fourier transform
(MP-WFRFT) on every packet.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from .chaoskey import TAU_PER_PACKET, Keystream
from .errors import KeystreamExhausted, PacketError
from .wire import SymbolFrame

PathLike = Union[str, Path]

FORWARD = 'forward'
INVERSE = 'inverse'
NUM_TERMS = 4


@dataclass(frozen=True)
class WfrftParams:
    alpha: float
    scale_vector: Tuple[int, ...] = (0,) * 8    # m0..m3, n0..n3
    num_terms: int = NUM_TERMS

    def __post_init__(self):
        vector = tuple(int(v) for v in self.scale_vector)
        if len(vector) != 2 * NUM_TERMS or any(not 0 <= v <= 3 for v in vector):
            raise ValueError(f'scale_vector must hold 8 integers in 0..3, got {self.scale_vector!r}')
        if self.num_terms != NUM_TERMS:
            raise ValueError(f'num_terms is fixed to {NUM_TERMS}')
        object.__setattr__(self, 'scale_vector', vector)

    @classmethod
    def from_tau(cls, tau: Sequence[float]) -> 'WfrftParams':
        return cls(float(tau[0]), tuple(int(t) for t in tau[1:TAU_PER_PACKET]))


def wfrft_weights(alpha: float, v: Sequence[int]) -> np.ndarray:
    """w_l = 1/4 sum_k exp(2 pi i / 4 * ((4 m_k + 1) alpha (k + 4 n_k) - l k)), l = 0..3."""
    vector = np.asarray(v, dtype=np.int64)
    if vector.shape != (2 * NUM_TERMS,) or vector.min() < 0 or vector.max() > 3:
        raise ValueError(f'scale vector must hold 8 integers in 0..3, got {v!r}')
    m, n = vector[:NUM_TERMS], vector[NUM_TERMS:]
    k = np.arange(NUM_TERMS)
    l = k[:, None]
    phase = (4 * m + 1) * alpha * (k + 4 * n)
    return np.exp(2j * np.pi / NUM_TERMS * (phase[None, :] - l * k[None, :])).sum(axis=1) / NUM_TERMS


def _fourier_powers(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """F^0..F^3 of the rows of x for the unitary DFT; F^2 is index reversal mod the row length."""
    rho = x.shape[-1]
    return (x, np.fft.fft(x, axis=-1, norm='ortho'), x[..., (-np.arange(rho)) % rho],
            np.fft.ifft(x, axis=-1, norm='ortho'))


def mpwfrft(x: Sequence[complex], params: WfrftParams, direction: str = FORWARD) -> np.ndarray:
    packet = np.asarray(x, dtype=np.complex128)
    if packet.ndim != 1 or packet.size == 0:
        raise PacketError('mpwfrft needs a non-empty 1-D packet')
    return mpwfrft_rows(packet[None, :], [params], direction)[0]


def mpwfrft_rows(packets: np.ndarray, params: Sequence[WfrftParams], direction: str = FORWARD) -> np.ndarray:
    """Transforms every row of `packets` with its own parameters."""
    if direction not in (FORWARD, INVERSE):
        raise ValueError(f'direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}')
    rows = np.asarray(packets, dtype=np.complex128)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise PacketError(f'bad packet array shape {rows.shape}')
    if len(params) != rows.shape[0]:
        raise PacketError(f'{len(params)} parameter sets for {rows.shape[0]} packets')
    sign = 1.0 if direction == FORWARD else -1.0
    weights = np.stack([wfrft_weights(sign * p.alpha, p.scale_vector) for p in params])
    out = np.zeros_like(rows)
    for l, power in enumerate(_fourier_powers(rows)):
        out += weights[:, l:l + 1] * power
    return out


@dataclass(frozen=True, eq=False)
class DiagonalCipher:
    amp_diag: np.ndarray
    phase_diag: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return self.amp_diag * self.phase_diag

    @classmethod
    def from_keystream(cls, ks: Keystream, varpi: float, num_symbols: int,
                       with_phase: bool = True) -> 'DiagonalCipher':
        if ks.num_symbols < num_symbols:
            raise KeystreamExhausted(f'keystream has {ks.num_symbols} symbols, frame needs {num_symbols}')
        f = np.abs(ks.f[:num_symbols])
        # f_max is scoped to this frame's slice
        amp = f / f.max() + varpi
        if with_phase:
            phase = np.exp(-2j * np.pi * ks.zeta[:num_symbols])
        else:
            phase = np.ones(num_symbols, dtype=np.complex128)
        return cls(amp, phase)


@dataclass(frozen=True, eq=False)
class CipherText:
    frame: SymbolFrame
    params_per_packet: Tuple[WfrftParams, ...]

    def to_bytes(self) -> bytes:
        """Interleaved real/imag float64, big-endian, packet after packet."""
        return self.frame.packets.astype('>c16').tobytes()

    @staticmethod
    def packets_from_bytes(data: bytes, per_packet: int) -> np.ndarray:
        return np.frombuffer(data, dtype='>c16').astype(np.complex128).reshape(-1, per_packet)


def dump_ciphertext(ct: CipherText, path: PathLike) -> None:
    Path(path).write_bytes(ct.to_bytes())


def packet_params(ks: Keystream, num_packets: int) -> Tuple[WfrftParams, ...]:
    if ks.num_packets < num_packets:
        raise KeystreamExhausted(f'keystream covers {ks.num_packets} packets, frame has {num_packets}')
    return tuple(WfrftParams.from_tau(ks.tau_for(p)) for p in range(num_packets))


def encrypt(frame: SymbolFrame, ks: Keystream, varpi: float) -> CipherText:
    shape = frame.packets.shape
    diag = DiagonalCipher.from_keystream(ks, varpi, frame.packets.size)
    params = packet_params(ks, frame.num_packets)
    d1 = frame.packets * diag.combined.reshape(shape)
    return CipherText(frame.with_packets(mpwfrft_rows(d1, params, FORWARD)), params)


def decrypt(ct: CipherText, ks: Keystream, varpi: float) -> SymbolFrame:
    frame = ct.frame
    shape = frame.packets.shape
    diag = DiagonalCipher.from_keystream(ks, varpi, frame.packets.size)
    params = packet_params(ks, frame.num_packets)
    e1 = mpwfrft_rows(frame.packets, params, INVERSE)
    return frame.with_packets(e1 / diag.combined.reshape(shape))
