"""Unscrambled Sobol sequence with Gray-code ordering.

Direction numbers use the common text layout ``d s a m_1 ... m_s`` (one line per
dimension >= 2); dimension 1 is the base-2 van der Corput sequence.  The
origin (index 0) is never emitted: the first point is index 1, ``(0.5, ..., 0.5)``.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

BITS = 32
MAX_INDEX = 2**BITS - 1

# Joe & Kuo (new-joe-kuo-6.21201), dimensions 2..16.
DEFAULT_TABLE_TEXT = """\
# d s a m_1 ... m_s
2 1 0 1
3 2 1 1 3
4 3 1 1 3 1
5 3 2 1 1 1
6 4 1 1 1 3 3
7 4 4 1 3 5 13
8 5 2 1 1 5 5 17
9 5 4 1 1 5 5 5
10 5 7 1 1 7 11 19
11 5 11 1 1 5 1 1
12 5 13 1 1 1 3 11
13 5 14 1 3 5 5 31
14 6 1 1 3 3 9 7 49
15 6 13 1 1 1 15 21 21
16 6 16 1 3 1 13 27 49
"""


class DirectionTableError(ValueError):
    pass


@dataclass(frozen=True)
class DirectionEntry:
    dim: int
    degree: int
    poly: int
    m: tuple[int, ...]


@dataclass(frozen=True)
class DirectionTable:
    entries: tuple[DirectionEntry, ...]

    @property
    def max_dim(self) -> int:
        return 1 + len(self.entries)


def load_direction_table(source: TextIO | str | Iterable[str]) -> DirectionTable:
    """Parse and validate a direction-number table."""
    if isinstance(source, str):
        source = io.StringIO(source)
    entries = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            nums = [int(f) for f in fields]
        except ValueError:
            raise DirectionTableError(f"line {lineno}: non-integer field in {line!r}") from None
        if len(nums) < 4:
            raise DirectionTableError(f"line {lineno}: expected 'd s a m_1 ... m_s'")
        d, s, a, *m = nums
        if s < 1 or len(m) != s:
            raise DirectionTableError(f"line {lineno}: degree {s} but {len(m)} initial numbers")
        if not 0 <= a < 2 ** (s - 1):
            raise DirectionTableError(f"line {lineno}: polynomial word {a} invalid for degree {s}")
        for j, mj in enumerate(m, start=1):
            if mj % 2 == 0 or not 0 < mj < 2**j:
                raise DirectionTableError(f"line {lineno}: m_{j}={mj} must be odd and < 2^{j}")
        expected = len(entries) + 2
        if d != expected:
            raise DirectionTableError(f"line {lineno}: dimension {d} out of order (expected {expected})")
        entries.append(DirectionEntry(d, s, a, tuple(m)))
    if not entries:
        raise DirectionTableError("no dimensions")
    return DirectionTable(tuple(entries))


def default_direction_table() -> DirectionTable:
    """Embedded table, or the file named by ``BNS_SOBOL_FILE`` when that is set."""
    path = os.environ.get("BNS_SOBOL_FILE")
    if path:
        with open(path) as fh:
            return load_direction_table(fh)
    return load_direction_table(DEFAULT_TABLE_TEXT)


def direction_vectors(table: DirectionTable, dim: int) -> np.ndarray:
    """(dim, BITS) array of direction integers v_k scaled to 2^BITS."""
    if dim > table.max_dim:
        raise DirectionTableError(f"table covers {table.max_dim} dimensions, {dim} requested")
    v = np.zeros((dim, BITS), dtype=np.uint64)
    v[0] = [1 << (BITS - 1 - k) for k in range(BITS)]
    for e in table.entries[: dim - 1]:
        s = e.degree
        row = [0] * BITS
        for k in range(min(s, BITS)):
            row[k] = e.m[k] << (BITS - 1 - k)
        for k in range(s, BITS):
            val = row[k - s] ^ (row[k - s] >> s)
            for j in range(1, s):
                if (e.poly >> (s - 1 - j)) & 1:
                    val ^= row[k - j]
            row[k] = val
        v[e.dim - 1] = row
    return v


class SobolStream:
    """Stateful Sobol generator; not safe to share between threads."""

    def __init__(self, dim: int = 8, table: DirectionTable | None = None):
        self.dim = dim
        self._v = direction_vectors(table or default_direction_table(), dim)
        self._state = np.zeros(dim, dtype=np.uint64)
        self.index = 0

    def skip_to(self, n: int) -> None:
        """Position the stream so the next emitted point has index ``n`` (n >= 1)."""
        if not 1 <= n <= MAX_INDEX:
            raise OverflowError(f"Sobol index {n} outside [1, 2^{BITS}-1]")
        self.index = n - 1
        gray = self.index ^ (self.index >> 1)
        state = np.zeros(self.dim, dtype=np.uint64)
        for k in range(BITS):
            if (gray >> k) & 1:
                state ^= self._v[:, k]
        self._state = state

    def next(self) -> np.ndarray:
        n = self.index + 1
        if n > MAX_INDEX:
            raise OverflowError("Sobol index overflow past 2^32 - 1")
        # rightmost zero bit of n-1
        c = ((~self.index) & self.index + 1).bit_length() - 1
        self._state = self._state ^ self._v[:, c]
        self.index = n
        return self._state.astype(float) / 2.0**BITS

    def draw(self, count: int) -> np.ndarray:
        """Next ``count`` points as a (count, dim) array."""
        start = self.index + 1
        stop = start + count
        if stop - 1 > MAX_INDEX:
            raise OverflowError("Sobol index overflow past 2^32 - 1")
        idx = np.arange(start, stop, dtype=np.uint64)
        gray = idx ^ (idx >> np.uint64(1))
        pts = np.zeros((count, self.dim), dtype=np.uint64)
        for k in range(BITS):
            bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
            pts[bit] ^= self._v[:, k]
        if count:
            self._state = pts[-1].copy()
            self.index = stop - 1
        return pts.astype(float) / 2.0**BITS


def sobol_next(stream: SobolStream) -> np.ndarray:
    return stream.next()


def sobol_points(n: int, dim: int = 8, table: DirectionTable | None = None) -> np.ndarray:
    """First ``n`` points (indices 1..n) of the sequence."""
    return SobolStream(dim, table).draw(n)
