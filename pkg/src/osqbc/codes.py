"""Binary linear (n, k, d) codes over GF(2).

Codewords are tuples of 0/1 ints so they can key dictionaries (the superposed
commitment maps codewords to amplitudes). Bulk work uses the uint8 matrix
returned by :meth:`LinearCode.codewords`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

Codeword = tuple[int, ...]

MAX_ENUM_K = 20
_RANDOM_RETRIES = 200


class CodeError(ValueError):
    pass


def _bits(x: Sequence[int] | str) -> Codeword:
    if isinstance(x, str):
        x = [int(ch) for ch in x.strip()]
    out = tuple(int(v) for v in x)
    if any(v not in (0, 1) for v in out):
        raise CodeError(f"not a bit string: {x!r}")
    return out


def gf2_rank(matrix: np.ndarray) -> int:
    m = np.array(matrix, dtype=np.uint8) % 2
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


@dataclass(frozen=True, eq=False)
class LinearCode:
    """A binary linear code given by a k x n generator matrix."""

    n: int
    k: int
    d: int
    generator: np.ndarray
    name: str = "custom"

    def __post_init__(self) -> None:
        g = np.asarray(self.generator, dtype=np.uint8)
        if g.shape != (self.k, self.n):
            raise CodeError(f"generator shape {g.shape} != ({self.k}, {self.n})")
        if gf2_rank(g) != self.k:
            raise CodeError("generator rows are not linearly independent over GF(2)")
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)

    @cached_property
    def codewords(self) -> np.ndarray:
        """All 2^k codewords as a (2^k, n) uint8 array, message order."""
        if self.k > MAX_ENUM_K:
            raise CodeError(f"k={self.k} exceeds enumeration bound {MAX_ENUM_K}")
        msgs = (np.arange(2**self.k)[:, None] >> np.arange(self.k - 1, -1, -1)) & 1
        words = (msgs.astype(np.uint8) @ self.generator) % 2
        words = words.astype(np.uint8)
        words.setflags(write=False)
        return words

    @cached_property
    def _members(self) -> frozenset[Codeword]:
        return frozenset(tuple(int(b) for b in row) for row in self.codewords)

    def contains(self, c: Sequence[int]) -> bool:
        c = _bits(c)
        if len(c) != self.n:
            return False
        if self.k <= MAX_ENUM_K:
            return c in self._members
        aug = np.vstack([self.generator, np.array(c, dtype=np.uint8)])
        return gf2_rank(aug) == self.k

    def encode(self, message: Sequence[int]) -> Codeword:
        m = np.array(_bits(message), dtype=np.uint8)
        if m.shape != (self.k,):
            raise CodeError("message length must equal k")
        return tuple(int(b) for b in (m @ self.generator) % 2)

    def generator_text(self) -> str:
        """Generator rows as '0'/'1' strings, one per line."""
        return "\n".join("".join(str(int(b)) for b in row) for row in self.generator)

    def __repr__(self) -> str:
        return f"LinearCode({self.name}, n={self.n}, k={self.k}, d={self.d})"


def min_distance(code: LinearCode) -> int:
    """Minimum Hamming weight over nonzero codewords (exhaustive)."""
    if code.k > MAX_ENUM_K:
        raise CodeError(f"k={code.k} too large for exhaustive min_distance")
    weights = code.codewords[1:].sum(axis=1)
    return int(weights.min())


def code_from_generator(rows: Sequence[Sequence[int] | str], name: str = "custom") -> LinearCode:
    g = np.array([_bits(r) for r in rows], dtype=np.uint8)
    k, n = g.shape
    probe = LinearCode(n=n, k=k, d=0, generator=g, name=name)
    return LinearCode(n=n, k=k, d=min_distance(probe), generator=g, name=name)


def parse_generator(text: str, name: str = "custom") -> LinearCode:
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    return code_from_generator(rows, name=name)


_HAMMING7 = ["1000110", "0100101", "0010011", "0001111"]
_EXT_HAMMING8 = ["10001101", "01001011", "00100111", "00011110"]


def make_code(family: str, **params) -> LinearCode:
    """Build a stock code and verify its distance.

    Families: ``repetition`` (n), ``hamming7``, ``extended_hamming8``,
    ``random`` (n, k, seed).
    """
    if family == "repetition":
        n = int(params["n"])
        if n < 1:
            raise CodeError("repetition length must be positive")
        code = code_from_generator([[1] * n], name=f"repetition({n})")
        expected = n
    elif family == "hamming7":
        code, expected = code_from_generator(_HAMMING7, name="hamming7"), 3
    elif family == "extended_hamming8":
        code, expected = code_from_generator(_EXT_HAMMING8, name="extended_hamming8"), 4
    elif family == "random":
        return _random_code(int(params["n"]), int(params["k"]), int(params.get("seed", 0)))
    else:
        raise CodeError(f"unknown code family {family!r}")
    if code.d != expected:
        raise CodeError(f"{code.name}: distance {code.d} != {expected}")
    return code


def _random_code(n: int, k: int, seed: int) -> LinearCode:
    if not 0 < k < n:
        raise CodeError("random code needs 0 < k < n")
    if k > MAX_ENUM_K:
        raise CodeError(f"k={k} exceeds enumeration bound {MAX_ENUM_K}")
    rng = np.random.default_rng(seed)
    for _ in range(_RANDOM_RETRIES):
        g = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        if gf2_rank(g) < k:
            continue
        code = code_from_generator(g, name=f"random({n},{k},{seed})")
        if n > k > code.d:
            return code
    raise CodeError(f"no random ({n},{k}) code with n > k > d after {_RANDOM_RETRIES} draws")


def code_from_spec(spec: str) -> LinearCode:
    """Parse a compact code name: ``hamming7``, ``repetition:5``, ``random:8:3:1``."""
    parts = spec.strip().split(":")
    family = parts[0]
    if family == "repetition":
        return make_code("repetition", n=int(parts[1]))
    if family == "random":
        seed = int(parts[3]) if len(parts) > 3 else 0
        return make_code("random", n=int(parts[1]), k=int(parts[2]), seed=seed)
    return make_code(family)


def dot_parity(c: Sequence[int], r: Sequence[int]) -> int:
    """XOR over i of c_i AND r_i."""
    c, r = _bits(c), _bits(r)
    if len(c) != len(r):
        raise CodeError(f"length mismatch: {len(c)} vs {len(r)}")
    return sum(a & b for a, b in zip(c, r)) & 1


def hamming_distance(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x != y for x, y in zip(_bits(a), _bits(b)))


def parities(code: LinearCode, r: Sequence[int]) -> np.ndarray:
    """c . r for every codeword, aligned with ``code.codewords``."""
    rv = np.array(_bits(r), dtype=np.uint8)
    if rv.shape != (code.n,):
        raise CodeError("partition key length must equal n")
    return ((code.codewords @ rv) % 2).astype(np.uint8)


def check_partition_key(code: LinearCode, r: Sequence[int]) -> Codeword:
    """Validate r: nonzero and not in the dual code (both subsets nonempty)."""
    r = _bits(r)
    if len(r) != code.n:
        raise CodeError("partition key length must equal n")
    if not any(r):
        raise CodeError("partition key must be nonzero")
    if not any(dot_parity(row, r) for row in code.generator):
        raise CodeError("partition key lies in the dual code; re-draw r")
    return r


def draw_partition_key(code: LinearCode, rng: np.random.Generator) -> Codeword:
    """Uniform nonzero r, re-drawn while it lies in the dual code."""
    while True:
        r = tuple(int(b) for b in rng.integers(0, 2, size=code.n))
        try:
            return check_partition_key(code, r)
        except CodeError:
            continue


def subset(code: LinearCode, r: Sequence[int], b: int) -> np.ndarray:
    """Rows of C_(b) = {c in C : c . r = b}."""
    return code.codewords[parities(code, r) == b]


def sample_codeword(code: LinearCode, r: Sequence[int], b: int, rng: np.random.Generator) -> Codeword:
    """Uniform member of C_(b)."""
    if b not in (0, 1):
        raise CodeError("b must be a bit")
    r = _bits(r)
    if code.k <= MAX_ENUM_K:
        members = subset(code, r, b)
        if len(members) == 0:
            raise CodeError(f"C_({b}) is empty: r lies in the dual code; re-draw r")
        return tuple(int(x) for x in members[rng.integers(len(members))])
    check_partition_key(code, r)
    # functional is balanced, so rejection succeeds with probability 1/2
    while True:
        c = code.encode(rng.integers(0, 2, size=code.k))
        if dot_parity(c, r) == b:
            return c


def nearest_in_subset(
    code: LinearCode, c: Sequence[int], r: Sequence[int], b: int, allowed: Sequence[int] | None = None
) -> Codeword | None:
    """Member of C_(b) closest to c; ties break lexicographically.

    With ``allowed`` (a 0/1 mask), only words differing from c inside the mask
    are considered; returns None if there are none.
    """
    members = subset(code, r, b)
    cv = np.array(_bits(c), dtype=np.uint8)
    diff = members ^ cv
    if allowed is not None:
        mask = np.array(_bits(allowed), dtype=np.uint8)
        ok = (diff & (1 - mask)).sum(axis=1) == 0
        members, diff = members[ok], diff[ok]
    if len(members) == 0:
        return None
    dist = diff.sum(axis=1)
    best = members[dist == dist.min()]
    return min(tuple(int(x) for x in row) for row in best)


def all_codewords(code: LinearCode) -> list[Codeword]:
    return [tuple(int(b) for b in row) for row in code.codewords]


def iter_bitstrings(n: int):
    return itertools.product((0, 1), repeat=n)
