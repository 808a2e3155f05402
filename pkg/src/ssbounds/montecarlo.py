"""Monte Carlo check of the analytic tail bounds with exhaustive ML decoding."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .bounds import tail_bound
from .codec import candidate_sections, check_budget, sample_entries, _scale
from .params import CodeParams
from .penalties import PenaltyProfile

BATCH = 512


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    z = norm.ppf(0.5 + confidence / 2.0)
    p = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p + z2n / 2.0) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def wilson_upper(successes: int, trials: int, confidence: float = 0.95) -> float:
    return wilson_interval(successes, trials, confidence)[1]


def wilson_lower(successes: int, trials: int, confidence: float = 0.95) -> float:
    return wilson_interval(successes, trials, confidence)[0]


def trial_rng(seed: int, i: int) -> np.random.Generator:
    """Independent stream for trial i, reproducible without running trials 0..i-1."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


@dataclass
class TrialStats:
    trials: int
    histogram: dict[int, int]  # lexicographic tie-breaking
    histogram_ties_as_errors: dict[int, int]
    histogram_ties_favorable: dict[int, int]
    block_errors: int
    tie_events: int
    power_mean: float
    power_se: float
    config: dict = field(default_factory=dict)

    def tail_count(self, l0: int, ties: str = "lexicographic") -> int:
        hist = {"lexicographic": self.histogram, "errors": self.histogram_ties_as_errors,
                "favorable": self.histogram_ties_favorable}[ties]
        return sum(c for l, c in hist.items() if l >= l0)

    def as_dict(self) -> dict:
        return {
            "config": self.config, "trials": self.trials,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "histogram_ties_as_errors": {str(k): v for k, v in sorted(self.histogram_ties_as_errors.items())},
            "histogram_ties_favorable": {str(k): v for k, v in sorted(self.histogram_ties_favorable.items())},
            "block_errors": self.block_errors, "tie_events": self.tie_events,
            "power_mean": self.power_mean, "power_se": self.power_se,
        }


def _run_chunk(params: CodeParams, kind: str, d: int, seed: int, start: int, stop: int,
               fixed: tuple | None, materialize: bool):
    L, M, n = params.L, params.M, params.n
    N = L * M
    scale = _scale(kind, d, params.P, L)
    sigma = math.sqrt(params.sigma2)
    cands = candidate_sections(L, M)
    cand_cols = cands + np.arange(L) * M
    hist = np.zeros((3, L + 1), dtype=np.int64)
    ties = 0
    p_sum, p_sq = [], []
    for b0 in range(start, stop, BATCH):
        b1 = min(b0 + BATCH, stop)
        B = b1 - b0
        X = np.empty((B, n, N))
        lev = np.empty((B, n, N), dtype=np.int64) if kind != "gaussian" else None
        beta = np.empty((B, L), dtype=np.int64)
        eps = np.empty((B, n))
        for k, i in enumerate(range(b0, b1)):
            rng = trial_rng(seed, i)
            if fixed is None:
                X[k], lv = sample_entries(rng, kind, d, n, N, params.P, L, materialize)
                if lev is not None:
                    lev[k] = lv
            else:
                X[k] = fixed[0]
                if lev is not None:
                    lev[k] = fixed[1]
            beta[k] = rng.integers(0, M, size=L)
            eps[k] = rng.normal(0.0, sigma, size=n)
        true_cols = beta + np.arange(L) * M
        if lev is not None:
            c = np.take_along_axis(lev, true_cols[:, None, :], axis=2).sum(axis=2) * scale
            cw = lev[:, :, cand_cols].sum(axis=3) * scale  # (B, n, M^L)
        else:
            c = np.take_along_axis(X, true_cols[:, None, :], axis=2).sum(axis=2)
            cw = X[:, :, cand_cols].sum(axis=3)
        Y = c + eps
        res = ((Y[:, :, None] - cw) ** 2).sum(axis=1)  # (B, M^L)
        rmin = res.min(axis=1, keepdims=True)
        minimizers = res == rmin
        mistakes = (cands[None, :, :] != beta[:, None, :]).sum(axis=2)  # (B, M^L)
        lex = mistakes[np.arange(B), np.argmax(minimizers, axis=1)]
        worst = np.where(minimizers, mistakes, -1).max(axis=1)
        best = np.where(minimizers, mistakes, L + 1).min(axis=1)
        ties += int((minimizers.sum(axis=1) > 1).sum())
        for row, m in enumerate((lex, worst, best)):
            hist[row] += np.bincount(m, minlength=L + 1)
        c2 = c * c
        p_sum.append(c2.sum(axis=1))
        p_sq.append((c2 * c2).sum(axis=1))
    return hist, ties, np.concatenate(p_sum), np.concatenate(p_sq)


def run_trials(params: CodeParams, kind: str, d: int | None, trials: int, seed: int,
               fixed_dictionary: bool = False, materialize: bool = False,
               threads: int = 1, budget_bits: float = 16) -> TrialStats:
    """Encode, transmit and ML-decode ``trials`` uniformly random words.

    By default every trial draws a fresh dictionary, so frequencies estimate the
    error probability averaged over dictionaries.  With ``fixed_dictionary``
    one dictionary (drawn from the seed) is reused, estimating the error
    probability conditioned on that dictionary.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check_budget(params.L, params.M, budget_bits)
    if kind == "bernoulli":
        d = 1
    elif kind == "gaussian":
        d = 0
    elif d is None or d < 1:
        raise ValueError("binomial dictionary needs d >= 1")
    fixed = None
    if fixed_dictionary:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2 ** 32,)))
        fixed = sample_entries(rng, kind, d, params.n, params.L * params.M, params.P,
                               params.L, materialize)
    bounds = np.linspace(0, trials, max(1, threads) + 1).astype(int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    job = lambda ab: _run_chunk(params, kind, d, seed, ab[0], ab[1], fixed, materialize)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, chunks))
    else:
        parts = [job(ab) for ab in chunks]
    hist = sum(p[0] for p in parts)
    ties = sum(p[1] for p in parts)
    # per-trial sums combined with fsum: identical for any chunking
    p_sum = math.fsum(np.concatenate([p[2] for p in parts]))
    p_sq = math.fsum(np.concatenate([p[3] for p in parts]))
    count = trials * params.n
    mean = p_sum / count
    var = max(p_sq / count - mean * mean, 0.0)
    to_dict = lambda h: {l: int(c) for l, c in enumerate(h) if c}
    config = {
        "L": params.L, "M": params.M, "n": params.n, "R_bits": params.R_bits, "v": params.v,
        "P": params.P, "kind": kind, "d": d, "seed": seed, "trials": trials,
        "fixed_dictionary": fixed_dictionary,
    }
    return TrialStats(
        trials=trials, histogram=to_dict(hist[0]), histogram_ties_as_errors=to_dict(hist[1]),
        histogram_ties_favorable=to_dict(hist[2]), block_errors=int(trials - hist[0][0]),
        tie_events=ties, power_mean=mean, power_se=math.sqrt(var / count), config=config,
    )


def analytic_tails(params: CodeParams, kind: str, d: int | None) -> dict[int, float]:
    """ln of the tail bound for every l0 in 1..L (penalties re-derived per l0)."""
    d_eff = {"gaussian": 0, "bernoulli": 1}.get(kind, d)
    profile = None if d_eff == 0 else PenaltyProfile(params.L, d_eff, params.v)
    return {l0: tail_bound(l0, params, profile) for l0 in range(1, params.L + 1)}


@dataclass(frozen=True)
class ConsistencyRow:
    l0: int
    ties: str
    count: int
    frequency: float
    wilson_lower: float
    wilson_upper: float
    bound: float  # min(1, exp(log tail))
    passed: bool


def bound_consistency(stats: TrialStats, tails, confidence: float = 0.95) -> list[ConsistencyRow]:
    """One-sided check: PASS unless the Wilson lower limit exceeds the capped bound.

    ``tails`` maps l0 to ln(tail bound), or is a BoundTable whose params must
    match the simulated configuration.
    """
    if hasattr(tails, "cumulative"):
        p = tails.params
        cfg = stats.config
        if (p.L, p.M, p.n) != (cfg["L"], cfg["M"], cfg["n"]) or not math.isclose(p.v, cfg["v"]):
            raise ValueError("bound table and simulation configurations differ")
        tails = tails.cumulative
    rows = []
    for ties in ("errors", "lexicographic", "favorable"):
        for l0 in sorted(tails):
            k = stats.tail_count(l0, ties)
            lo, hi = wilson_interval(k, stats.trials, confidence)
            cap = min(1.0, math.exp(min(tails[l0], 0.0)))
            rows.append(ConsistencyRow(l0=l0, ties=ties, count=k, frequency=k / stats.trials,
                                       wilson_lower=lo, wilson_upper=hi, bound=cap,
                                       passed=lo <= cap))
    return rows


def power_check(stats: TrialStats, P: float, n_se: float = 3.0) -> bool:
    return abs(stats.power_mean - P) <= n_se * stats.power_se
