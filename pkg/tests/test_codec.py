import itertools
import math

import numpy as np
import pytest
from scipy.stats import binom, chisquare

from ssbounds.codec import (
    DecodeBudgetError, Dictionary, SparseWord, awgn, bits_to_word, candidate_sections,
    count_mistakes, dump_dictionary, encode, gen_dictionary, load_dictionary, ml_decode,
    word_to_bits,
)
from ssbounds.params import derive_params


def params(L=2, M=4, v=20.0, d=0, frac=0.5, P=1.0):
    from ssbounds.params import capacity_bits
    return derive_params(L, 0.0, frac * capacity_bits(v), v, P=P, d=d, M=M)


def test_bernoulli_equals_binomial_d1_support():
    p = params()
    b = gen_dictionary(p, "bernoulli", 1)
    c = gen_dictionary(p, "binomial", 1, d=1)
    s = math.sqrt(p.P / p.L)
    assert set(np.round(np.unique(b.entries) / s, 12)) == {-1.0, 1.0}
    assert set(np.round(np.unique(c.entries) / s, 12)) == {-1.0, 1.0}


def test_binomial_d4_support_and_pmf():
    # P/L = 1, d = 4: sums of four +-1/2 signs, so (2k - 4)/2 with variance P/L = 1
    p = derive_params(4, 0.0, 1.0, 20.0, P=4.0, d=4, M=4)
    X = gen_dictionary(p, "binomial", 3, n=50_000)
    vals, counts = np.unique(X.entries, return_counts=True)
    assert np.array_equal(vals, [-2, -1, 0, 1, 2])
    assert np.var(X.entries) == pytest.approx(1.0, rel=0.01)
    # pmf (1,4,6,4,1)/16 from enumerating 2^4 sign patterns
    patterns = [sum(s) for s in itertools.product((-1, 1), repeat=4)]
    expected = np.array([patterns.count(k) for k in (-4, -2, 0, 2, 4)]) / 16
    assert np.allclose(expected, [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16])
    assert chisquare(counts, expected * counts.sum()).pvalue > 1e-3


@pytest.mark.parametrize("materialize", [False, True])
def test_binomial_chi_square(materialize):
    d = 9
    p = params(d=d)
    X = gen_dictionary(p, "binomial", 17, d=d, n=12_500, materialize=materialize)
    assert X.entries.size == 100_000
    k = (X.levels + d) // 2
    counts = np.bincount(k.ravel(), minlength=d + 1)
    assert chisquare(counts, binom.pmf(np.arange(d + 1), d, 0.5) * counts.sum()).pvalue > 1e-3


def test_lattice_membership():
    p = params(d=7)
    X = gen_dictionary(p, "binomial", 2, d=7)
    k = X.entries / X.scale
    assert np.all(np.abs(k - np.rint(k)) <= 1e-12)
    assert np.all((np.rint(k) + 7) % 2 == 0)


@pytest.mark.parametrize("kind,d", [("gaussian", 0), ("bernoulli", 1), ("binomial", 5)])
def test_entry_variance(kind, d):
    p = params(L=4, M=5, d=d, P=2.0)
    X = gen_dictionary(p, kind, 4, d=d or None, n=50_000)
    assert X.entries.size == 10 ** 6
    assert np.var(X.entries) == pytest.approx(p.P / p.L, rel=0.01)
    assert abs(np.mean(X.entries)) < 5 * math.sqrt(p.P / p.L / 1e6)


def test_gen_dictionary_errors_and_determinism():
    p = params()
    with pytest.raises(ValueError):
        gen_dictionary(p, "ternary", 0)
    with pytest.raises(ValueError):
        gen_dictionary(p, "binomial", 0, d=0)
    with pytest.raises(ValueError):
        gen_dictionary(p, "gaussian", 0, n=0)
    a, b = gen_dictionary(p, "gaussian", 9), gen_dictionary(p, "gaussian", 9)
    assert np.array_equal(a.entries, b.entries)


def test_encode_toy_and_naive_loop():
    E = np.arange(12, dtype=float).reshape(2, 6)  # L=2, M=3
    X = Dictionary("gaussian", 0, 2, 3, E, 1.0, 0)
    c = encode(X, SparseWord((1, 2)))
    assert np.array_equal(c, E[:, 1] + E[:, 5])
    p = params(L=3, M=4, d=3)
    Xb = gen_dictionary(p, "binomial", 5, d=3)
    beta = SparseWord((3, 0, 2))
    naive = [sum(Xb.entries[i, j * 4 + s] for j, s in enumerate(beta.sections)) for i in range(Xb.n)]
    assert np.allclose(encode(Xb, beta), naive, rtol=0, atol=1e-12)
    with pytest.raises(IndexError):
        encode(Xb, SparseWord((4, 0, 0)))
    with pytest.raises(ValueError):
        encode(Xb, SparseWord((1, 1)))


def test_encode_single_section():
    E = np.random.default_rng(0).normal(size=(5, 4))
    X = Dictionary("gaussian", 0, 1, 4, E, 1.0, 0)
    assert np.array_equal(encode(X, SparseWord((2,))), E[:, 2])


def test_codeword_power():
    p = params(L=3, M=4)
    rng = np.random.default_rng(1)
    powers = []
    for seed in range(400):
        X = gen_dictionary(p, "gaussian", seed, n=250)
        beta = SparseWord(rng.integers(0, 4, size=3))
        powers.append(np.mean(encode(X, beta) ** 2))
    assert np.mean(powers) == pytest.approx(p.P, rel=0.02)


def test_awgn():
    c = np.linspace(-1, 1, 10)
    s = awgn(c, 0.0, 3)
    assert np.array_equal(s.output, c)
    big = awgn(np.zeros(10 ** 6), 0.25, 5)
    assert np.var(big.noise) == pytest.approx(0.25, rel=0.01)
    assert np.array_equal(awgn(c, 0.3, 8).noise, awgn(c, 0.3, 8).noise)
    assert np.array_equal(s.output - s.codeword, s.noise)
    with pytest.raises(ValueError):
        awgn(c, -1.0, 0)


def test_candidates():
    assert candidate_sections(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert candidate_sections(3, 4).shape == (64, 3)


def naive_ml(X, Y):
    best, arg = math.inf, None
    for beta in itertools.product(range(X.M), repeat=X.L):
        r = float(np.sum((Y - encode(X, SparseWord(beta))) ** 2))
        if r < best:
            best, arg = r, beta
    return SparseWord(arg), best


@pytest.mark.parametrize("kind,d", [("gaussian", 0), ("binomial", 3), ("bernoulli", 1)])
def test_ml_decode_matches_naive_scan(kind, d):
    p = params(L=3, M=4, d=d, v=5.0)
    for seed in range(10):
        X = gen_dictionary(p, kind, seed, d=d or None)
        beta = SparseWord(np.random.default_rng(seed).integers(0, 4, size=3))
        Y = awgn(encode(X, beta), p.sigma2, seed + 100).output
        got = ml_decode(X, Y)
        want, best = naive_ml(X, Y)
        assert got == want
        # no candidate strictly better than the returned word
        assert float(np.sum((Y - encode(X, got)) ** 2)) <= best


def test_ml_decode_noiseless_and_budget():
    p = params(L=2, M=8, v=20.0)
    X = gen_dictionary(p, "gaussian", 3)
    beta = SparseWord((5, 2))
    assert ml_decode(X, encode(X, beta)) == beta
    with pytest.raises(DecodeBudgetError, match="budget"):
        ml_decode(X, encode(X, beta), budget_bits=4)


def test_ml_lexicographic_ties():
    E = np.zeros((3, 4))  # all-zero dictionary: every word ties
    X = Dictionary("bernoulli", 1, 2, 2, E, 1.0, 0)
    assert ml_decode(X, np.ones(3)) == SparseWord((0, 0))


def test_count_mistakes():
    b = SparseWord((1, 2, 3))
    assert count_mistakes(b, b) == 0
    assert count_mistakes(b, SparseWord((0, 0, 0))) == 3
    assert count_mistakes(b, SparseWord((1, 0, 3))) == 1
    with pytest.raises(ValueError):
        count_mistakes(b, SparseWord((1, 2)))


def test_bit_mapping_roundtrip():
    beta = bits_to_word([1, 0, 0, 1, 1, 1], 2, 8)
    assert beta == SparseWord((4, 7))
    assert word_to_bits(beta, 8) == [1, 0, 0, 1, 1, 1]
    with pytest.raises(ValueError):
        bits_to_word([1, 0], 1, 3)
    with pytest.raises(ValueError):
        bits_to_word([1], 1, 4)


@pytest.mark.parametrize("kind,d", [("gaussian", 0), ("binomial", 6)])
def test_dump_roundtrip(tmp_path, kind, d):
    p = params(L=3, M=4, d=d)
    X = gen_dictionary(p, kind, 2 ** 63 + 5, d=d or None)
    path = tmp_path / "x.bin"
    dump_dictionary(X, path)
    raw = path.read_bytes()
    assert len(raw) == 56 + 8 * X.entries.size
    Y = load_dictionary(path)
    assert (Y.kind, Y.d, Y.L, Y.M, Y.seed, Y.scale) == (X.kind, X.d, X.L, X.M, X.seed, X.scale)
    assert np.array_equal(Y.entries, X.entries)
    if kind != "gaussian":
        assert np.array_equal(Y.levels, X.levels)
