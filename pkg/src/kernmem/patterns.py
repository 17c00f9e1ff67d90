"""Bipolar pattern sets: generation, corruption, overlap, and text persistence.

Patterns are length-N vectors with entries in {-1, +1}, stacked row-wise into
a P x N matrix.  Every randomized operation takes an explicit 64-bit seed and
is a pure function of its arguments, so identical calls reproduce identical
bits; sub-seeds for independent trials are derived with :func:`derive_seed`.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_SEED",
    "PatternSet",
    "PatternFormatError",
    "EntryDomainError",
    "derive_seed",
    "generate_patterns",
    "corrupt",
    "overlap",
    "save_patterns",
    "load_patterns",
]

#: Seeds are unsigned 64-bit integers: valid values are 0 <= seed < MAX_SEED.
MAX_SEED = 2**64

_MASK64 = MAX_SEED - 1


class PatternFormatError(ValueError):
    """Malformed pattern file.  Carries the 1-based line and column."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class EntryDomainError(PatternFormatError):
    """Pattern file entry is an integer outside {-1, +1}."""


def _splitmix64(value):
    # SplitMix64 finalizer; fixed here as the version-stable mixing function
    # behind derive_seed.
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = (value ^ (value >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def _fold_part(part):
    """Stable 64-bit digest of one sub-seed component (int or str)."""
    if isinstance(part, str):
        # FNV-1a over the UTF-8 bytes; stable across platforms and versions.
        h = 0xCBF29CE484222325
        for byte in part.encode("utf-8"):
            h = ((h ^ byte) * 0x100000001B3) & _MASK64
        return h
    if isinstance(part, (int, np.integer)):
        return _splitmix64(int(part) & _MASK64)
    raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def derive_seed(root, *parts):
    """Derive an independent sub-seed from a root seed and identifying parts.

    The root is XOR-combined with a SplitMix64 chain over the parts (ints or
    strings), so trials, patterns, and experiment cells get decorrelated
    streams while remaining reproducible from the single root seed.
    """
    state = _check_seed(root)
    for part in parts:
        state = _splitmix64(state ^ _fold_part(part))
    return state


def _rng(seed):
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


def _check_state(vec, n=None, name="state"):
    """Validate a bipolar vector and return it as an int8 array."""
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(
            f"dimension mismatch: {name} has length {arr.shape[0]}, expected {n}"
        )
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError(f"{name} entries must all be -1 or +1")
    return arr.astype(np.int8, copy=False)


@dataclass(frozen=True, eq=False)
class PatternSet:
    """P x N matrix of stored bipolar patterns, one pattern per row.

    Immutable after construction: the data array is copied and marked
    read-only, so instances are safe to share across threads.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"pattern data must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"invalid dimensions: need p >= 1 and n >= 1, got {arr.shape}")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("pattern entries must all be -1 or +1")
        arr = arr.astype(np.int8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def p(self):
        """Number of stored patterns."""
        return self.data.shape[0]

    @property
    def n(self):
        """Number of neurons (pattern length)."""
        return self.data.shape[1]

    def pattern(self, index):
        """Read-only view of one stored pattern."""
        return self.data[index]


def generate_patterns(n, p, seed):
    """Draw p independent uniform bipolar patterns of length n.

    Each entry is -1 or +1 with probability 1/2 under a PCG64 stream seeded
    by ``seed``; the result is deterministic given (n, p, seed).
    """
    if n < 1 or p < 1:
        raise ValueError(f"invalid dimensions: need n >= 1 and p >= 1, got n={n}, p={p}")
    data = _rng(seed).integers(0, 2, size=(int(p), int(n)), dtype=np.int8) * 2 - 1
    return PatternSet(data)


def overlap(a, b):
    """Normalized overlap (1/N) sum_i a_i b_i between two bipolar states.

    Symmetric in its arguments and equal to 1 - 2d/N for states at Hamming
    distance d.  The accumulation is exact integer arithmetic; only the final
    division is floating point.
    """
    va = _check_state(a, name="a")
    vb = _check_state(b, n=va.shape[0], name="b")
    total = int(va.astype(np.int64) @ vb.astype(np.int64))
    return total / va.shape[0]


def corrupt(pattern, target_overlap, seed):
    """Flip exactly round(N*(1 - target_overlap)/2) distinct coordinates.

    The flip count makes the achieved overlap with ``pattern`` exactly
    1 - 2f/N, the closest value to ``target_overlap`` on the achievable grid
    (ties resolved by round-half-even on the floating-point product).  Flip
    positions are drawn without replacement from the stream for ``seed``.
    """
    vec = _check_state(pattern, name="pattern")
    if not -1.0 <= target_overlap <= 1.0:
        raise ValueError(f"target_overlap must be in [-1, 1], got {target_overlap}")
    n = vec.shape[0]
    flips = int(round(n * (1.0 - target_overlap) / 2.0))
    out = vec.copy()
    if flips > 0:
        idx = _rng(seed).choice(n, size=flips, replace=False)
        out[idx] = -out[idx]
    out.setflags(write=False)
    return out


def _atomic_write_text(path, text):
    """Write text to path atomically (temp file in the same dir, then rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_patterns(pattern_set, path):
    """Write a pattern set as text: header ``N P``, then P rows of N entries."""
    lines = [f"{pattern_set.n} {pattern_set.p}"]
    for row in pattern_set.data:
        lines.append(" ".join("1" if v > 0 else "-1" for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


_TOKEN = re.compile(r"\S+")


def _line_tokens(line):
    return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def load_patterns(path):
    """Parse a pattern file written by :func:`save_patterns`.

    Raises :class:`PatternFormatError` (with 1-based line/column) on
    structural problems and :class:`EntryDomainError` on integer entries
    outside {-1, +1}.  Round-trips bit-exactly with :func:`save_patterns`.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")

    header = _line_tokens(lines[0]) if lines else []
    if len(header) != 2:
        raise PatternFormatError(
            f"header must be 'N P' (two integers), found {len(header)} tokens",
            line=1,
            column=header[2][1] if len(header) > 2 else 1,
        )
    dims = []
    for text, col in header:
        try:
            dims.append(int(text))
        except ValueError:
            raise PatternFormatError(f"header token {text!r} is not an integer", 1, col) from None
    n, p = dims
    if n < 1 or p < 1:
        raise PatternFormatError(f"header dimensions must be positive, got N={n} P={p}", 1, 1)

    data = np.empty((p, n), dtype=np.int8)
    for r in range(p):
        lineno = r + 2
        if lineno - 1 >= len(lines) or not lines[lineno - 1].strip():
            raise PatternFormatError(f"expected {p} data rows, found {r}", lineno, 1)
        line = lines[lineno - 1]
        tokens = line.split(" ")
        if len(tokens) == n and all(t in ("1", "-1") for t in tokens):
            data[r] = [1 if t == "1" else -1 for t in tokens]
            continue
        # Slow path: locate the offending token and report its column.
        positioned = _line_tokens(line)
        if len(positioned) != n:
            col = positioned[n][1] if len(positioned) > n else len(line) + 1
            raise PatternFormatError(
                f"expected {n} entries, found {len(positioned)}", lineno, col
            )
        for text, col in positioned:
            if text in ("1", "-1"):
                continue
            try:
                value = int(text)
            except ValueError:
                raise PatternFormatError(
                    f"entry {text!r} is not an integer", lineno, col
                ) from None
            raise EntryDomainError(
                f"entry {value} outside {{-1, +1}}", lineno, col
            )
        data[r] = [int(text) for text, _ in positioned]

    for extra, line in enumerate(lines[p + 1 :], start=p + 2):
        if line.strip():
            raise PatternFormatError(f"unexpected content after {p} data rows", extra, 1)

    return PatternSet(data)
