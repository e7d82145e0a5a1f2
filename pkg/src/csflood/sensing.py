"""Signature-sequence generation and indexing.

Every (origin node, hop count) pair in the network owns a length-M chip
sequence of ±1 entries. The sequences are the columns of an M x N*(L+1)
matrix generated from a counter-based PRNG (numpy Philox keyed with the
seed), one uniform bit per entry in row-major order, so the same
parameters always reproduce the same matrix, bit for bit.

Node ids are 1-based (S_1 .. S_N); hop counts run 0..L inclusive, giving
L+1 columns per node. Column layout: column (origin-1)*(L+1) + hop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Union

import numpy as np


@dataclass(frozen=True)
class SensingParams:
    """Dimensions and seed for one signature matrix.

    n_nodes: N, number of sensor nodes (>= 2).
    max_hops: L, time-to-live in hops (>= 1); hop stamps span 0..L.
    seq_len: M, chips per packet (>= 1, and < N*(L+1) so the
        decoding system stays underdetermined).
    seed: 64-bit PRNG key.
    """

    n_nodes: int
    max_hops: int
    seq_len: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ValueError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.seq_len < 1:
            raise ValueError(f"seq_len must be >= 1, got {self.seq_len}")
        if self.seq_len >= self.n_cols:
            raise ValueError(
                f"seq_len must be < n_nodes*(max_hops+1) for an "
                f"underdetermined system: {self.seq_len} >= {self.n_cols}"
            )

    @property
    def n_cols(self) -> int:
        """Total number of (origin, hop) sequences, Q = N*(L+1)."""
        return self.n_nodes * (self.max_hops + 1)


def bernoulli_entries(n_rows: int, n_cols: int, seed: int) -> np.ndarray:
    """Raw equiprobable ±1 matrix from the seeded counter-based PRNG.

    One uniform bit per entry, filled in row-major order. Exposed
    separately from :func:`generate_signatures` so statistical checks can
    sample shapes that a valid :class:`SensingParams` would reject.
    """
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"matrix shape must be positive, got {n_rows}x{n_cols}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    bits = rng.integers(0, 2, size=(n_rows, n_cols), dtype=np.int64)
    return (2.0 * bits - 1.0).astype(np.float64)


class SignatureMatrix:
    """The M x N*(L+1) matrix of ±1 signature columns.

    Immutable after construction; safe to share across concurrent
    sessions. The entries array is kept read-only to enforce that.
    """

    def __init__(self, params: SensingParams, entries: np.ndarray) -> None:
        expected = (params.seq_len, params.n_cols)
        if entries.shape != expected:
            raise ValueError(f"entries shape {entries.shape} != expected {expected}")
        self.params = params
        self.entries = np.ascontiguousarray(entries, dtype=np.float64)
        self.entries.setflags(write=False)
        self._entries_t: np.ndarray | None = None
        self._gram: np.ndarray | None = None
        self._sigma_max: float | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def entries_t(self) -> np.ndarray:
        """C-contiguous transpose, cached for the solver's inner loop."""
        if self._entries_t is None:
            t = np.ascontiguousarray(self.entries.T)
            t.setflags(write=False)
            self._entries_t = t
        return self._entries_t

    @property
    def gram(self) -> np.ndarray:
        """A^T A, cached for the solver's inner loop."""
        if self._gram is None:
            g = np.ascontiguousarray(self.entries.T @ self.entries)
            g.setflags(write=False)
            self._gram = g
        return self._gram


def generate_signatures(params: SensingParams) -> SignatureMatrix:
    """Generate the signature matrix for ``params``, deterministic per seed."""
    entries = bernoulli_entries(params.seq_len, params.n_cols, params.seed)
    return SignatureMatrix(params, entries)


def column_index(params: SensingParams, origin: int, hop: int) -> int:
    """Column of the (origin, hop) sequence: (origin-1)*(L+1) + hop."""
    if not 1 <= origin <= params.n_nodes:
        raise ValueError(f"origin {origin} out of range 1..{params.n_nodes}")
    if not 0 <= hop <= params.max_hops:
        raise ValueError(f"hop {hop} out of range 0..{params.max_hops}")
    return (origin - 1) * (params.max_hops + 1) + hop


def origin_hop(params: SensingParams, col: int) -> tuple[int, int]:
    """Inverse of :func:`column_index`: column -> (origin, hop)."""
    if not 0 <= col < params.n_cols:
        raise ValueError(f"column {col} out of range 0..{params.n_cols - 1}")
    per_node = params.max_hops + 1
    return col // per_node + 1, col % per_node


def sequence_of(matrix: SignatureMatrix, origin: int, hop: int) -> np.ndarray:
    """The length-M signature sequence of one (origin, hop) pair."""
    return matrix.entries[:, column_index(matrix.params, origin, hop)].copy()


def export_text(matrix: SignatureMatrix, dest: Union[str, IO[str]]) -> None:
    """Write the matrix as plain text: one row per line, ±1 entries
    separated by single spaces. Intended for cross-implementation
    comparison of the generator."""
    np.savetxt(dest, matrix.entries, fmt="%d")


def load_text(src: Union[str, IO[str]]) -> np.ndarray:
    """Read a matrix written by :func:`export_text` (entries only)."""
    arr = np.loadtxt(src, dtype=np.float64, ndmin=2)
    bad = ~np.isin(arr, (-1.0, 1.0))
    if bad.any():
        raise ValueError("matrix file contains entries other than -1/+1")
    return arr
