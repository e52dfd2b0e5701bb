import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaysim.erasure import (
    PRIME, Chunk, CorruptChunks, InsufficientChunks, decode, encode, reconstruction_threshold,
    vandermonde,
)


def poly_eval(coeffs, x):
    """Horner evaluation mod the field prime, one stripe at a time."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + int(c)) % PRIME
    return acc


def test_threshold_values():
    assert [reconstruction_threshold(n) for n in (4, 7, 9, 10, 30)] == [2, 3, 4, 4, 11]


def test_any_four_of_ten_reconstruct():
    data = bytes(range(256)) * 3 + b"tail"
    chunks = encode(data, 10)
    for subset in itertools.combinations(chunks, 4):
        assert decode(subset, 4) == data


def test_all_chunks_reconstruct():
    data = b"relay"
    assert decode(encode(data, 10), 4) == data


def test_three_chunk_subsets_are_insufficient():
    chunks = encode(b"x" * 100, 10)
    sample = random.Random(1).sample(chunks, 6)
    for subset in itertools.combinations(sample, 3):
        with pytest.raises(InsufficientChunks):
            decode(subset, 4)


def test_duplicates_do_not_count():
    chunks = encode(b"abc", 10)
    with pytest.raises(InsufficientChunks):
        decode([chunks[0]] * 4, 4)


def test_chunks_are_polynomial_evaluations():
    data = b"evaluate me"
    k, n = 3, 7
    framed = len(data).to_bytes(4, "big") + data + b"\x00" * (len(data) % 2)
    symbols = [int.from_bytes(framed[i:i + 2], "big") for i in range(0, len(framed), 2)]
    symbols += [0] * (-len(symbols) % k)
    stripes = [symbols[i:i + k] for i in range(0, len(symbols), k)]
    for chunk in encode(data, n, k):
        assert chunk.symbols.tolist() == [poly_eval(s, chunk.index) for s in stripes]
    assert vandermonde([0, 1, 2], 3).tolist() == [[1, 0, 0], [1, 1, 1], [1, 2, 4]]


def test_fewer_than_threshold_do_not_pin_the_payload():
    # two payloads that agree on k-1 chunks: add a multiple of the vanishing polynomial
    k, n = 4, 10
    base = encode(b"\x00" * 20, n, k)
    shifted = []
    points = [0, 1, 2]
    for ch in base:
        x = ch.index
        vanish = (x - 0) * (x - 1) * (x - 2) % PRIME
        shifted.append(Chunk(x, (ch.symbols + vanish) % PRIME))
    for p in points:
        assert np.array_equal(base[p].symbols, shifted[p].symbols)
    assert not np.array_equal(base[5].symbols, shifted[5].symbols)


def test_corrupt_chunks_detected():
    chunks = encode(b"hello world", 7)
    k = reconstruction_threshold(7)
    bad = [Chunk(c.index, (c.symbols + 12345 * (c.index + 1) ** 2) % PRIME) for c in chunks[:k]]
    with pytest.raises(CorruptChunks):
        decode(bad, k)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        encode(b"x", 3, 4)
    with pytest.raises(ValueError):
        encode(b"x", 3, 0)


@given(st.binary(min_size=1, max_size=4096), st.integers(4, 30), st.randoms(use_true_random=False))
def test_round_trip_any_threshold_subset(data, n, rnd):
    k = reconstruction_threshold(n)
    chunks = encode(data, n)
    assert decode(rnd.sample(chunks, k), k) == data
    with pytest.raises(InsufficientChunks):
        decode(rnd.sample(chunks, k - 1), k)
