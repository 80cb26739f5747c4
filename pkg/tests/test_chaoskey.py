import math
from dataclasses import replace

import numpy as np
import pytest

import secure_kgcomm.chaoskey as chaoskey
from secure_kgcomm.chaoskey import (TAU_PER_PACKET, ChaosKey, KeyFormat, generate_keystream, keyspace_bits, load_key,
                                    save_key, sin_pi, start_state)
from secure_kgcomm.errors import DegenerateKey, KeyFormatError, KeystreamExhausted


@pytest.mark.parametrize('x', [0.0, 0.1, 0.25, 0.5, 0.77, 1.0, 1.5, -0.3, 3.9])
def test_sin_pi_matches_libm(x):
    assert sin_pi(x) == pytest.approx(math.sin(math.pi * x), abs=1e-13)


def test_keystream_is_deterministic(key):
    a = generate_keystream(key, 256, 4)
    b = generate_keystream(ChaosKey(**key.as_dict()), 256, 4)
    assert a.equals(b)


def test_prefix_is_stable(key):
    short = generate_keystream(key, 64, 2)
    long = generate_keystream(key, 64, 2)
    assert np.array_equal(short.f, long.f)
    longer = generate_keystream(key, 128, 2)
    assert np.array_equal(longer.f[:64], short.f)


def test_one_ulp_apart_keys_give_unrelated_phases():
    tested = 0
    for seed in range(20):
        key = ChaosKey.random(seed)
        field = ('x0', 'y0', 'theta')[seed % 3]
        try:
            near = key.perturbed(1 if seed % 2 else -1, field)
            a = generate_keystream(key, 1000, 1)
            b = generate_keystream(near, 1000, 1)
        except (DegenerateKey, KeyFormatError):
            continue
        tested += 1
        assert np.mean(np.abs(a.zeta - b.zeta) > 0.01) >= 0.9, (seed, field)
    assert tested >= 15


def test_any_key_change_selects_another_orbit(key):
    a = generate_keystream(key, 1000, 1)
    others = (replace(key, x0=key.x0 + 1e-10), replace(key, burn_in=key.burn_in + 1),
              replace(key, varpi=float(np.nextafter(key.varpi, 2.0))))
    for other in others:
        b = generate_keystream(other, 1000, 1)
        assert np.mean(np.abs(a.zeta - b.zeta) > 0.01) >= 0.9


def test_start_state_uses_every_key_bit(key):
    start = start_state(key)
    assert all(0.0 < v < 1.0 for v in start)
    for field in ('x0', 'y0', 'theta'):
        assert start_state(key.perturbed(1, field)) != start
    assert start_state(key, 1) != start
    assert start_state(key, 2 ** 64 + 1) == start_state(key, 1)


def test_nonces_select_independent_keystreams(key):
    a = generate_keystream(key, 1000, 4, nonce=0)
    b = generate_keystream(key, 1000, 4, nonce=1)
    assert np.mean(np.abs(a.zeta - b.zeta) > 0.01) >= 0.9
    assert not np.array_equal(a.tau, b.tau)
    assert generate_keystream(key, 1000, 4, nonce=1).equals(b)


def test_fixed_point_start_is_degenerate(monkeypatch):
    # (0, 0) maps to itself for every theta
    monkeypatch.setattr(chaoskey, 'start_state', lambda key, nonce=0: (0.0, 0.0))
    with pytest.raises(DegenerateKey):
        generate_keystream(ChaosKey.random(987654, burn_in=10), 16, 1, nonce=5)


def test_keystream_ranges(key):
    ks = generate_keystream(key, 500, 20)
    assert ks.f.min() >= 1e-9
    assert ks.zeta.min() >= 0.0 and ks.zeta.max() < 1.0
    tau = ks.tau.reshape(20, TAU_PER_PACKET)
    assert np.all((tau[:, 0] > 0) & (tau[:, 0] < 4))
    assert set(np.unique(tau[:, 1:])) <= {0.0, 1.0, 2.0, 3.0}


def test_exhausted_keystream(key):
    ks = generate_keystream(key, 16, 2)
    assert ks.tau_for(1).size == TAU_PER_PACKET
    with pytest.raises(KeystreamExhausted):
        ks.tau_for(2)


@pytest.mark.parametrize('params', [
    dict(x0=0.0, y0=0.5, theta=0.5),
    dict(x0=0.5, y0=1.0, theta=0.5),
    dict(x0=0.5, y0=0.5, theta=-0.1),
    dict(x0=0.5, y0=0.5, theta=0.5, burn_in=-1),
    dict(x0=0.5, y0=0.5, theta=0.5, varpi=0.0),
])
def test_key_bounds(params):
    with pytest.raises(KeyFormatError):
        ChaosKey(**params)


def test_keyspace_bits():
    assert keyspace_bits() == 191
    assert keyspace_bits(KeyFormat(real_fields=2)) == 138
    assert keyspace_bits(KeyFormat(real_fields=4)) == 244


def test_random_key_is_seeded():
    assert ChaosKey.random(5) == ChaosKey.random(5)
    assert ChaosKey.random(5) != ChaosKey.random(6)
    k = ChaosKey.random(5, burn_in=12)
    assert k.burn_in == 12
    assert 1.0 <= k.varpi < 2.0


def test_save_then_load(tmp_path, key):
    path = tmp_path / 'key.txt'
    save_key(key, path)
    assert load_key(path) == key


def test_bundled_key(data_dir, key):
    assert load_key(data_dir / 'key.txt') == key


@pytest.mark.parametrize('text', [
    'x0=0.1\ny0=0.2\n',
    'x0=0.1\ny0=0.2\ntheta=0.3\nburn_in=1000\nvarpi=1.0\nseed=4\n',
    'x0=0.1\ny0=0.2\ntheta=0.3\nburn_in=ten\nvarpi=1.0\n',
    'x0 0.1\n',
])
def test_malformed_key_file(tmp_path, text):
    path = tmp_path / 'key.txt'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(KeyFormatError):
        load_key(path)
