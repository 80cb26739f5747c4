import numpy as np
import pytest

from secure_kgcomm.adversary import (DIAGONAL_ONLY, NO_KEY, RANDOM_KEY, Strategy, eavesdrop, parse_strategy,
                                     recover_packets)
from secure_kgcomm.chaoskey import generate_keystream
from secure_kgcomm.channel import ChannelConfig, transmit
from secure_kgcomm.cipher import encrypt
from secure_kgcomm.errors import KgCommError
from secure_kgcomm.kgraph import KnowledgeGraph
from secure_kgcomm.wire import deserialize_kg, frame_bits, serialize_kg, unframe_bits

SENT = KnowledgeGraph((('Alan_Turing', 'born_in', 'London'), ('London', 'capital_of', 'United_Kingdom')))


@pytest.fixture
def plain_frame():
    return frame_bits(serialize_kg(SENT), 64, 32)


@pytest.mark.parametrize('text, expected', [
    ('no_key', Strategy(NO_KEY)),
    ('diagonal_only', Strategy(DIAGONAL_ONLY)),
    ('random_key', Strategy(RANDOM_KEY, 0)),
    (' random_key:7 ', Strategy(RANDOM_KEY, 7)),
])
def test_parse_strategy(text, expected):
    assert parse_strategy(text) == expected


def test_strategy_names():
    assert str(Strategy(RANDOM_KEY, 7)) == 'random_key:7'
    assert str(Strategy(DIAGONAL_ONLY, 7)) == 'diagonal_only'
    with pytest.raises(ValueError):
        parse_strategy('brute_force')
    with pytest.raises(ValueError):
        parse_strategy('random_key:x')


def test_eavesdropper_reads_an_unencrypted_frame(plain_frame):
    received, h = transmit(plain_frame.packets.ravel(), ChannelConfig(snr_db=300.0))
    # no KB: templates fall back to the relation words
    assert eavesdrop(received, h, Strategy(NO_KEY), plain_frame) == \
        'Alan Turing born in London. London capital of United Kingdom.'


@pytest.mark.parametrize('strategy', [Strategy(NO_KEY), Strategy(RANDOM_KEY, 3), Strategy(DIAGONAL_ONLY, 3)])
def test_eavesdropper_fails_on_ciphertext(key, plain_frame, strategy):
    ks = generate_keystream(key, plain_frame.packets.size, plain_frame.num_packets)
    ct = encrypt(plain_frame, ks, key.varpi)
    received, h = transmit(ct.frame.packets.ravel(), ChannelConfig(snr_db=300.0))
    assert eavesdrop(received, h, strategy, plain_frame) == ''


def test_recovered_packets_keep_the_frame_shape(plain_frame):
    received, h = transmit(plain_frame.packets.ravel(), ChannelConfig(snr_db=20.0, fading='rayleigh', seed=2))
    for strategy in (Strategy(NO_KEY), Strategy(RANDOM_KEY, 1), Strategy(DIAGONAL_ONLY, 1)):
        assert recover_packets(received, h, strategy, plain_frame).shape == plain_frame.packets.shape


def test_diagonal_guess_only_rescales(plain_frame):
    received, h = transmit(plain_frame.packets.ravel(), ChannelConfig(snr_db=300.0))
    guessed = recover_packets(received, h, Strategy(DIAGONAL_ONLY, 4), plain_frame)
    ratio = plain_frame.packets / guessed
    assert np.allclose(ratio.imag, 0.0, atol=1e-9)
    assert np.all(ratio.real >= 1.0)


def test_deep_fade_yields_nothing(plain_frame):
    assert eavesdrop(plain_frame.packets.ravel() * 0, 0j, Strategy(NO_KEY), plain_frame) == ''


def test_no_key_eavesdropper_never_decodes_a_frame(key, plain_frame):
    decoded = 0
    for nonce in range(100):
        ks = generate_keystream(key, plain_frame.packets.size, plain_frame.num_packets, nonce)
        ct = encrypt(plain_frame, ks, key.varpi)
        received, h = transmit(ct.frame.packets.ravel(), ChannelConfig(snr_db=300.0, seed=nonce))
        packets = recover_packets(received, h, Strategy(NO_KEY), plain_frame, nonce=nonce)
        try:
            deserialize_kg(unframe_bits(packets.ravel(), plain_frame))
        except KgCommError:
            continue
        decoded += 1
    assert decoded == 0
