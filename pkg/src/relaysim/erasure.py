"""Reed-Solomon style erasure code over the prime field GF(65537).

Data is packed into 16-bit symbols and cut into stripes of ``k`` symbols.
Each stripe is the coefficient vector of a polynomial of degree < k; chunk
``i`` holds that polynomial evaluated at the point ``i`` for every stripe.
Any ``k`` distinct chunks pin the polynomial down, ``k - 1`` do not.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PRIME = 65537
LEN_FMT = ">I"


class ErasureError(Exception):
    pass


class InsufficientChunks(ErasureError):
    pass


class CorruptChunks(ErasureError):
    pass


def reconstruction_threshold(n_chunks: int) -> int:
    return n_chunks // 3 + 1


@dataclass(frozen=True)
class Chunk:
    index: int
    symbols: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, Chunk) and self.index == other.index
                and np.array_equal(self.symbols, other.symbols))

    def __hash__(self):
        return hash((self.index, self.symbols.tobytes()))


def _to_symbols(data: bytes, k: int) -> np.ndarray:
    framed = struct.pack(LEN_FMT, len(data)) + data
    if len(framed) % 2:
        framed += b"\x00"
    symbols = np.frombuffer(framed, dtype=">u2").astype(np.int64)
    stripes = -(-len(symbols) // k)
    padded = np.zeros(stripes * k, dtype=np.int64)
    padded[: len(symbols)] = symbols
    # column j holds the coefficients of stripe j
    return padded.reshape(stripes, k).T


def _from_symbols(coeffs: np.ndarray) -> bytes:
    if np.any(coeffs >= 1 << 16):
        raise CorruptChunks("decoded symbol outside the 16-bit data range")
    raw = coeffs.T.reshape(-1).astype(">u2").tobytes()
    (length,) = struct.unpack(LEN_FMT, raw[:4])
    if length > len(raw) - 4:
        raise CorruptChunks("length prefix exceeds decoded payload")
    return raw[4: 4 + length]


def vandermonde(points: Iterable[int], k: int) -> np.ndarray:
    pts = np.asarray(list(points), dtype=np.int64) % PRIME
    out = np.ones((len(pts), k), dtype=np.int64)
    for c in range(1, k):
        out[:, c] = out[:, c - 1] * pts % PRIME
    return out


def encode(data: bytes, n_chunks: int, k: int | None = None) -> list[Chunk]:
    k = reconstruction_threshold(n_chunks) if k is None else k
    if not 1 <= k <= n_chunks:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n_chunks}")
    if n_chunks > PRIME:
        raise ValueError("more chunks than field points")
    coeffs = _to_symbols(data, k)
    evals = _encoding_matrix(n_chunks, k) @ coeffs % PRIME
    return [Chunk(i, evals[i]) for i in range(n_chunks)]


@lru_cache(maxsize=64)
def _encoding_matrix(n_chunks: int, k: int) -> np.ndarray:
    return vandermonde(range(n_chunks), k)


@lru_cache(maxsize=256)
def _interpolation_matrix(points: tuple[int, ...]) -> np.ndarray:
    """Inverse Vandermonde via Lagrange basis polynomials: column j holds the
    coefficients of the basis polynomial that is 1 at points[j]."""
    k = len(points)
    master = [1]  # coefficients, lowest degree first
    for x in points:
        nxt = [0] * (len(master) + 1)
        for d, c in enumerate(master):
            nxt[d] = (nxt[d] - x * c) % PRIME
            nxt[d + 1] = (nxt[d + 1] + c) % PRIME
        master = nxt
    out = np.zeros((k, k), dtype=np.int64)
    for j, xj in enumerate(points):
        # synthetic division of master by (x - xj)
        quotient = [0] * k
        carry = 0
        for d in range(k, 0, -1):
            carry = (master[d] + carry * xj) % PRIME
            quotient[d - 1] = carry
        denom = 1
        for m, xm in enumerate(points):
            if m != j:
                denom = denom * (xj - xm) % PRIME
        inv = pow(denom, PRIME - 2, PRIME)
        out[:, j] = [q * inv % PRIME for q in quotient]
    return out


def decode(chunks: Iterable[Chunk], k: int) -> bytes:
    unique: dict[int, Chunk] = {}
    for chunk in chunks:
        unique.setdefault(chunk.index, chunk)
    if len(unique) < k:
        raise InsufficientChunks(f"{len(unique)} distinct chunks, {k} required")
    chosen = [unique[i] for i in sorted(unique)[:k]]
    points = tuple(c.index for c in chosen)
    values = np.stack([c.symbols for c in chosen])
    coeffs = _interpolation_matrix(points) @ values % PRIME
    return _from_symbols(coeffs)
