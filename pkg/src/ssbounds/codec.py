"""Dictionaries, encoding, the AWGN channel and brute-force ML decoding.

Everything here is desk scale: the ML decoder enumerates all M**L
codewords.  Discrete dictionaries keep their integer lattice levels so
codewords are exact and equal codewords give bit-identical residuals.
"""

from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import CodeParams

KINDS = ("gaussian", "bernoulli", "binomial")
_KIND_CODE = {"gaussian": 0, "bernoulli": 1, "binomial": 2}
DEFAULT_BUDGET_BITS = 24
_CHUNK = 1 << 15


class DecodeBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class Dictionary:
    kind: str
    d: int
    L: int
    M: int
    entries: np.ndarray  # n x (L*M)
    scale: float
    seed: int
    levels: np.ndarray | None = None  # integer lattice index 2k - d, discrete kinds only

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def column(self, section: int, index: int) -> np.ndarray:
        return self.entries[:, section * self.M + index]


@dataclass(frozen=True)
class SparseWord:
    sections: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(int(s) for s in self.sections))

    def __len__(self) -> int:
        return len(self.sections)

    def columns(self, M: int) -> np.ndarray:
        return np.arange(len(self.sections)) * M + np.asarray(self.sections, dtype=np.int64)


@dataclass(frozen=True)
class ChannelSample:
    codeword: np.ndarray
    noise: np.ndarray
    output: np.ndarray
    sigma2: float


def _scale(kind: str, d: int, P: float, L: int) -> float:
    if kind == "gaussian":
        return math.sqrt(P / L)
    return math.sqrt(P / (d * L))


def sample_entries(rng: np.random.Generator, kind: str, d: int, n: int, N: int,
                   P: float, L: int, materialize: bool = False):
    """Draw an n x N dictionary; returns (entries, levels or None)."""
    scale = _scale(kind, d, P, L)
    if kind == "gaussian":
        return rng.normal(0.0, scale, size=(n, N)), None
    if materialize:
        # Sum d consecutive +/-1 columns of an n x dN sign matrix.
        signs = rng.integers(0, 2, size=(n, N, d), dtype=np.int64) * 2 - 1
        levels = signs.sum(axis=2)
    else:
        levels = 2 * rng.binomial(d, 0.5, size=(n, N)).astype(np.int64) - d
    return levels * scale, levels


def gen_dictionary(params: CodeParams, kind: str, seed: int, d: int | None = None,
                   n: int | None = None, materialize: bool = False) -> Dictionary:
    """Draw a dictionary with per-entry variance P/L.

    ``d`` defaults to params.d for binomial and is forced to 1 for bernoulli.
    ``materialize`` builds binomial entries from an explicit sign matrix.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown dictionary kind {kind!r}")
    if kind == "bernoulli":
        d = 1
    elif kind == "binomial":
        d = params.d if d is None else d
        if d < 1:
            raise ValueError("binomial dictionary needs d >= 1")
    else:
        d = 0
    n = params.n if n is None else n
    N = params.L * params.M
    if n < 1 or N < 1:
        raise ValueError("dictionary dimensions must be positive")
    rng = np.random.default_rng(seed)
    entries, levels = sample_entries(rng, kind, d, n, N, params.P, params.L, materialize)
    return Dictionary(kind=kind, d=d, L=params.L, M=params.M, entries=entries,
                      scale=_scale(kind, d, params.P, params.L), seed=int(seed), levels=levels)


def _check_word(X: Dictionary, beta: SparseWord) -> None:
    if len(beta) != X.L:
        raise ValueError(f"word has {len(beta)} sections, dictionary has {X.L}")
    if any(not 0 <= s < X.M for s in beta.sections):
        raise IndexError(f"section index out of range [0, {X.M})")


def encode(X: Dictionary, beta: SparseWord) -> np.ndarray:
    """c = X beta: sum of one column per section."""
    _check_word(X, beta)
    cols = beta.columns(X.M)
    if X.levels is not None:
        return X.levels[:, cols].sum(axis=1) * X.scale
    return X.entries[:, cols].sum(axis=1)


def awgn(c: np.ndarray, sigma2: float, seed) -> ChannelSample:
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, math.sqrt(sigma2), size=np.shape(c))
    return ChannelSample(codeword=np.asarray(c), noise=eps, output=c + eps, sigma2=sigma2)


def candidate_sections(L: int, M: int) -> np.ndarray:
    """All M**L section-index tuples in lexicographic order."""
    return np.array(list(itertools.product(range(M), repeat=L)), dtype=np.int64).reshape(-1, L)


def check_budget(L: int, M: int, budget_bits: float = DEFAULT_BUDGET_BITS) -> None:
    if L * math.log2(M) > budget_bits:
        raise DecodeBudgetError(
            f"ML enumeration of M^L = {M}^{L} words exceeds the budget of 2^{budget_bits}")


def candidate_residuals(X: Dictionary, Y: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """||Y - X beta||^2 for each candidate row (computed directly, no expansion)."""
    offsets = np.arange(X.L) * X.M
    out = np.empty(len(candidates))
    for start in range(0, len(candidates), _CHUNK):
        cols = candidates[start:start + _CHUNK] + offsets
        if X.levels is not None:
            cw = X.levels[:, cols].sum(axis=2) * X.scale
        else:
            cw = X.entries[:, cols].sum(axis=2)
        out[start:start + _CHUNK] = ((Y[:, None] - cw) ** 2).sum(axis=0)
    return out


def ml_decode(X: Dictionary, Y: np.ndarray, budget_bits: float = DEFAULT_BUDGET_BITS) -> SparseWord:
    """argmin_beta ||Y - X beta||^2; ties go to the lexicographically smallest word."""
    check_budget(X.L, X.M, budget_bits)
    cands = candidate_sections(X.L, X.M)
    res = candidate_residuals(X, np.asarray(Y, dtype=float), cands)
    return SparseWord(cands[int(np.argmin(res))])


def count_mistakes(beta: SparseWord, beta_hat: SparseWord) -> int:
    if len(beta) != len(beta_hat):
        raise ValueError("words have different numbers of sections")
    return sum(a != b for a, b in zip(beta.sections, beta_hat.sections))


def bits_to_word(bits, L: int, M: int) -> SparseWord:
    """Plain radix split of L*log2(M) bits, most significant first; M must be a power of 2."""
    if M < 2 or M & (M - 1):
        raise ValueError("bit mapping needs M to be a power of two")
    b = int(math.log2(M))
    bits = [int(x) for x in bits]
    if len(bits) != L * b:
        raise ValueError(f"expected {L * b} bits, got {len(bits)}")
    return SparseWord(int("".join(map(str, bits[j * b:(j + 1) * b])), 2) for j in range(L))


def word_to_bits(beta: SparseWord, M: int) -> list[int]:
    if M < 2 or M & (M - 1):
        raise ValueError("bit mapping needs M to be a power of two")
    b = int(math.log2(M))
    return [int(ch) for s in beta.sections for ch in format(s, f"0{b}b")]


# Binary dump: little-endian header of seven 64-bit fields, then row-major float64.
_HEADER = struct.Struct("<qqqqqdQ")


def dump_dictionary(X: Dictionary, path) -> None:
    header = _HEADER.pack(X.n, X.L, X.M, X.d, _KIND_CODE[X.kind], X.scale, X.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(X.entries, dtype="<f8").tobytes())


def load_dictionary(path) -> Dictionary:
    raw = Path(path).read_bytes()
    n, L, M, d, code, scale, seed = _HEADER.unpack_from(raw)
    kind = {v: k for k, v in _KIND_CODE.items()}[code]
    entries = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, L * M).copy()
    levels = None
    if kind != "gaussian":
        levels = np.rint(entries / scale).astype(np.int64)
    return Dictionary(kind=kind, d=d, L=L, M=M, entries=entries, scale=scale, seed=seed,
                      levels=levels)
