"""Segmented prime sieve, prime store queries, and the on-disk prime cache."""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SEGMENT_SIZE = 1 << 18  # odd slots per segment; 32 KiB of bits

CACHE_MAGIC = b"BVPC"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")
_ESCAPE = 0


class PrimeEngineError(Exception):
    pass


class SieveDomainError(PrimeEngineError, ValueError):
    pass


class OutOfRangeError(PrimeEngineError, ValueError):
    pass


class SieveResourceError(PrimeEngineError, MemoryError):
    pass


class CacheFormatError(PrimeEngineError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CacheVersionError(PrimeEngineError):
    pass


@dataclass(frozen=True, eq=False)
class PrimeStore:
    """All primes up to ``limit``, as a read-only int64 array."""

    limit: int
    primes: np.ndarray = field(repr=False)
    # derived tables (e.g. Li at every prime) memoised by consumers
    memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.primes.setflags(write=False)

    def __len__(self) -> int:
        return int(self.primes.size)

    @property
    def count(self) -> int:
        return int(self.primes.size)

    def _check(self, value: float, what: str = "y") -> None:
        if value > self.limit:
            raise OutOfRangeError(f"{what}={value} exceeds store limit {self.limit}")

    def pi(self, y: float) -> int:
        return count_primes(self, y)

    def primes_upto(self, y: float) -> np.ndarray:
        self._check(y)
        if y < 2:
            return self.primes[:0]
        return self.primes[: np.searchsorted(self.primes, math.floor(y), side="right")]


def _base_primes(n: int) -> np.ndarray:
    """Plain sieve of Eratosthenes for 2..n (used for sieving primes up to sqrt(limit))."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    # odd integers lo, lo+2, ..., < hi ; lo is odd
    n_slots = (hi - lo + 1) // 2
    mask = np.ones(n_slots, dtype=bool)
    for p in base:
        p = int(p)
        if p == 2:
            continue
        pp = p * p
        if pp >= hi:
            break
        start = max(pp, -(-lo // p) * p)
        if start % 2 == 0:
            start += p
        if start >= hi:
            continue
        mask[(start - lo) // 2 :: p] = False
    return lo + 2 * np.flatnonzero(mask).astype(np.int64)


def build_prime_store(limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE,
                      memory_budget: int | None = None) -> PrimeStore:
    """Sieve every prime up to ``limit`` using odd-only segments of ``segment_size`` slots.

    ``memory_budget`` (bytes) caps the per-segment working set; exceeding it, or a
    failed allocation, raises :class:`SieveResourceError` naming the segment.
    """
    limit = int(limit)
    if limit < 2:
        raise SieveDomainError(f"limit must be >= 2, got {limit}")
    if segment_size < 64:
        raise SieveDomainError(f"segment_size must be >= 64, got {segment_size}")

    base = _base_primes(math.isqrt(limit))
    chunks = [np.array([2], dtype=np.int64)]
    span = 2 * segment_size
    lo = 3
    while lo <= limit:
        hi = min(lo + span, limit + 1)
        if memory_budget is not None and segment_size * 9 > memory_budget:
            raise SieveResourceError(
                f"segment [{lo}, {hi}) needs ~{segment_size * 9} bytes, budget is {memory_budget}")
        try:
            chunks.append(_sieve_segment(lo, hi, base))
        except MemoryError as exc:
            raise SieveResourceError(f"allocation failed while sieving segment [{lo}, {hi})") from exc
        lo = hi if hi % 2 == 1 else hi + 1
    return PrimeStore(limit, np.concatenate(chunks))


def count_primes(store: PrimeStore, y: float) -> int:
    """pi(y): number of primes <= floor(y)."""
    if y < 0:
        raise OutOfRangeError(f"y must be non-negative, got {y}")
    store._check(y)
    if y < 2:
        return 0
    return int(np.searchsorted(store.primes, math.floor(y), side="right"))


def primes_in_range(store: PrimeStore, lo: float, hi: float) -> np.ndarray:
    """Primes p with lo <= p < hi (half-open), increasing."""
    if lo < 0 or lo > hi:
        raise OutOfRangeError(f"need 0 <= lo <= hi, got lo={lo}, hi={hi}")
    # only primes < hi are needed, so hi may exceed the limit by up to one
    if math.ceil(hi) - 1 > store.limit:
        raise OutOfRangeError(f"hi={hi} exceeds store limit {store.limit}")
    i = np.searchsorted(store.primes, math.ceil(lo), side="left")
    j = np.searchsorted(store.primes, math.ceil(hi), side="left")
    return store.primes[i:j]


# --- cache file -----------------------------------------------------------
#
# layout: magic "BVPC" | u16 version | u64 limit | u64 count | delta stream | u32 CRC32
# delta stream: one byte gap/2 per prime (gap from the previous prime, starting
# at 0); byte 0x00 escapes to a little-endian u32 holding the absolute gap.
# The 2 -> 3 gap of 1 is always escaped.


def _encode_deltas(primes: np.ndarray) -> bytes:
    gaps = np.diff(primes, prepend=0)
    halves = gaps // 2
    plain = (gaps % 2 == 0) & (halves >= 1) & (halves <= 255)
    if plain.all():
        return halves.astype(np.uint8).tobytes()
    out = bytearray()
    start = 0
    for i in np.flatnonzero(~plain):
        i = int(i)
        out += halves[start:i].astype(np.uint8).tobytes()
        out.append(_ESCAPE)
        out += struct.pack("<I", int(gaps[i]))
        start = i + 1
    out += halves[start:].astype(np.uint8).tobytes()
    return bytes(out)


def _decode_deltas(stream: bytes, count: int, base_offset: int) -> np.ndarray:
    raw = np.frombuffer(stream, dtype=np.uint8)
    gaps = np.empty(count, dtype=np.int64)
    pos = 0
    k = 0
    while k < count:
        if pos >= raw.size:
            raise CacheFormatError("delta stream ended early", base_offset + pos)
        rest = raw[pos:]
        zeros = np.flatnonzero(rest == _ESCAPE)
        run = int(zeros[0]) if zeros.size else rest.size
        run = min(run, count - k)
        gaps[k : k + run] = rest[:run].astype(np.int64) * 2
        k += run
        pos += run
        if k < count:
            if pos >= raw.size or raw[pos] != _ESCAPE:
                raise CacheFormatError("delta stream ended early", base_offset + pos)
            if pos + 5 > raw.size:
                raise CacheFormatError("truncated escape record", base_offset + pos)
            gaps[k] = struct.unpack_from("<I", stream, pos + 1)[0]
            k += 1
            pos += 5
    if pos != raw.size:
        raise CacheFormatError("trailing bytes after delta stream", base_offset + pos)
    return np.cumsum(gaps)


def save_cache(store: PrimeStore, path: str | Path) -> Path:
    path = Path(path)
    body = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, store.limit, store.count)
    body += _encode_deltas(store.primes)
    blob = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)
    return path


def load_cache(path: str | Path, expected_limit: int | None = None) -> PrimeStore:
    """Read a cache written by :func:`save_cache`, verifying magic, CRC and version."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 4:
        raise CacheFormatError("file too short for header", len(blob))
    magic, version, limit, count = _HEADER.unpack_from(blob, 0)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}", 0)
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != crc:
        raise CacheFormatError("CRC32 mismatch", len(blob) - 4)
    if version != CACHE_VERSION:
        raise CacheVersionError(f"cache format version {version}, expected {CACHE_VERSION}")
    if expected_limit is not None and limit != expected_limit:
        raise CacheVersionError(f"cache limit {limit} does not match requested {expected_limit}")
    primes = _decode_deltas(blob[_HEADER.size : -4], count, _HEADER.size)
    if count and primes[-1] > limit:
        raise CacheFormatError("last prime exceeds recorded limit", _HEADER.size)
    return PrimeStore(int(limit), primes)


def load_or_build(limit: int, path: str | Path | None = None,
                  segment_size: int = DEFAULT_SEGMENT_SIZE) -> PrimeStore:
    """Load a cache at ``path`` covering ``limit``, otherwise sieve (and save when ``path`` is given)."""
    limit = int(limit)
    if path is not None and Path(path).exists():
        store = load_cache(path)
        if store.limit >= limit:
            return store
    store = build_prime_store(limit, segment_size)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        save_cache(store, path)
    return store
