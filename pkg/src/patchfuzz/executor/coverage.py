"""AFL-style edge coverage with hit-count buckets.

The map is logically a 65536-byte array; it is stored sparsely as
``{index: bucket}`` because a run touches only a few dozen edges.
"""
from __future__ import annotations

import hashlib

MAP_SIZE = 1 << 16
BUCKETS = (0, 1, 2, 3, 4, 8, 16, 32, 128)

_BUCKET_TABLE = bytes(
    0 if n == 0 else 1 if n == 1 else 2 if n == 2 else 3 if n == 3 else
    4 if n < 8 else 8 if n < 16 else 16 if n < 32 else 32 if n < 128 else 128
    for n in range(256)
)


def bucket(count: int) -> int:
    return _BUCKET_TABLE[min(count, 255)]


def block_id(*parts) -> int:
    """Stable 16-bit block id derived from arbitrary labels."""
    h = hashlib.blake2b("\x1f".join(map(str, parts)).encode(), digest_size=2)
    return int.from_bytes(h.digest(), "little")


def edge_index(prev: int, cur: int) -> int:
    return ((prev >> 1) ^ cur) % MAP_SIZE


class CoverageMap:
    """Bucketized edge hit counts plus the rolling ``prev_loc``.

    ``raw`` keeps exact hit counts for maps built by recording edges; the
    buckets are always derived from them.  Maps absorbed into a global map
    carry buckets only.
    """

    __slots__ = ("buckets", "raw", "prev_loc")

    def __init__(self, buckets=None, prev_loc=0):
        self.buckets = dict(buckets or {})
        self.raw = {}
        self.prev_loc = prev_loc

    @classmethod
    def from_raw(cls, raw_counts, prev_loc=0):
        m = cls({i: _BUCKET_TABLE[c if c < 255 else 255] for i, c in raw_counts.items() if c}, prev_loc)
        m.raw = raw_counts
        return m

    def record_edge(self, prev: int, cur: int) -> "CoverageMap":
        """Count one traversal of ``prev -> cur`` and re-bucket that cell."""
        idx = edge_index(prev, cur)
        count = self.raw.get(idx, 0) + 1
        self.raw[idx] = count
        self.buckets[idx] = bucket(count)
        self.prev_loc = cur
        return self

    def edges(self) -> frozenset:
        """Indices with a nonzero bucket (hit counts ignored)."""
        return frozenset(i for i, b in self.buckets.items() if b)

    def without(self, indices) -> "CoverageMap":
        if not indices:
            return self
        return CoverageMap({i: b for i, b in self.buckets.items() if i not in indices}, self.prev_loc)

    def to_bytes(self) -> bytes:
        dense = bytearray(MAP_SIZE)
        for i, b in self.buckets.items():
            dense[i] = b
        return bytes(dense)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CoverageMap":
        if len(data) != MAP_SIZE:
            raise ValueError("coverage map must be 65536 bytes")
        return cls({i: b for i, b in enumerate(data) if b})

    def digest(self) -> str:
        items = sorted(self.buckets.items())
        return hashlib.blake2b(repr(items).encode(), digest_size=8).hexdigest()

    def __getitem__(self, idx):
        return self.buckets.get(idx, 0)

    def __len__(self):
        return MAP_SIZE

    def __eq__(self, other):
        if not isinstance(other, CoverageMap):
            return NotImplemented
        return {i: b for i, b in self.buckets.items() if b} == {i: b for i, b in other.buckets.items() if b}

    def __repr__(self):
        return f"CoverageMap({len(self.edges())} edges)"


def has_new_coverage(cov: CoverageMap, global_map: CoverageMap) -> bool:
    """True iff ``cov`` sets a bucket bit absent from ``global_map``.

    ``global_map`` absorbs ``cov`` (bitwise OR per cell) as a side effect.
    """
    g = global_map.buckets
    new = False
    for idx, b in cov.buckets.items():
        old = g.get(idx, 0)
        if b & ~old:
            new = True
            g[idx] = old | b
    return new
