"""Finite-length achievable rates from the section-error tail bound.

For each number of sections L the inner rate R is swept over a grid of
capacity fractions; at each R the smallest l0 with tail bound <= eps0 is
found, and an outer code of rate 1 - 2 l0/L is assumed on top.  The
reported point maximises the overall rate (1 - 2 l0/L) R.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .bounds import tail_bound
from .params import capacity_bits, derive_params
from .penalties import PenaltyProfile, PenaltySet

DICT_KINDS = ("gaussian", "bernoulli", "binomial")


def default_rate_fractions() -> list[float]:
    """0.99, 0.989, ..., 0.05 (multiples of 0.001 of capacity)."""
    return [k / 1000 for k in range(990, 49, -1)]


def dictionary_d(kind: str, d: int | None) -> int:
    if kind == "gaussian":
        return 0
    if kind == "bernoulli":
        return 1
    if kind == "binomial":
        if d is None or d < 1:
            raise ValueError("binomial dictionary needs d >= 1")
        return int(d)
    raise ValueError(f"unknown dictionary kind {kind!r}; expected one of {DICT_KINDS}")


def min_passing_l0(params, penalties, eps0: float, l_max: int | None = None,
                   hint: int | None = None, cache: dict | None = None) -> int | None:
    """Smallest l0 in [l_lo, l_max] whose tail bound is <= eps0, or None.

    Relies on the tail bound being nonincreasing in l0, which holds for l0 < L:
    later thresholds drop terms and shrink the penalties.  At l0 = L the
    binomial iota_1 can become undefined, so L is only tried when nothing
    below it passes.
    """
    if not 0 < eps0:
        raise ValueError("eps0 must be positive")
    L = params.L
    thr = math.log(eps0)
    l_lo = penalties.l0 if isinstance(penalties, PenaltySet) else 1
    hi = L if l_max is None else min(l_max, L)
    if hi < l_lo:
        return None
    cache = {} if cache is None else cache

    def tail(l0):
        if l0 not in cache:
            cache[l0] = tail_bound(l0, params, penalties)
        return cache[l0]

    def passes(l0):
        return tail(l0) <= thr

    top = hi if hi < L else L - 1
    if top < l_lo or not passes(top):
        if hi == L and passes(L):
            return L
        return None
    # invariant: passes(hi_ok), and everything below lo_bad + 1 fails
    hi_ok, lo_bad = top, l_lo - 1
    if hint is not None and lo_bad < hint < hi_ok:
        if passes(hint):
            hi_ok = hint
            if hint - 1 > lo_bad and not passes(hint - 1):
                return hint
        else:
            lo_bad = hint
    while hi_ok - lo_bad > 1:
        mid = (hi_ok + lo_bad) // 2
        if passes(mid):
            hi_ok = mid
        else:
            lo_bad = mid
    return hi_ok


@dataclass(frozen=True)
class RateCurvePoint:
    L: int
    n: int | None
    R_bits: float | None
    l0: int | None
    alpha0: float | None
    overall_rate_bits: float | None
    capacity_bits: float
    kind: str
    d: int
    eps0: float
    status: str

    def row(self) -> list:
        return [self.L, self.n, self.R_bits, self.l0, self.alpha0, self.overall_rate_bits,
                self.capacity_bits, self.kind, self.d, self.eps0, self.status]


CSV_COLUMNS = ("L", "n", "R_bits", "l0", "alpha0", "overall_rate_bits", "capacity_bits",
               "kind", "d", "eps0", "status")


def _overall(l0: int, L: int, R: float) -> float:
    return (1.0 - 2.0 * l0 / L) * R


def achievable_rate(L: int, v: float, a: float, kind: str = "gaussian", d: int | None = None,
                    eps0: float = 1e-4, rate_fractions=None, P: float = 1.0,
                    prune: bool = True) -> RateCurvePoint:
    """Best overall rate over the R grid for one L.

    With ``prune`` a grid point is skipped, or its l0 search cut short, when
    even the best possible outer-code rate at that R cannot strictly beat the
    current maximum.  The argmax is unchanged; ties go to the larger R.
    """
    d_eff = dictionary_d(kind, d)
    fracs = default_rate_fractions() if rate_fractions is None else list(rate_fractions)
    c_bits = capacity_bits(v)
    grid = sorted({f * c_bits for f in fracs}, reverse=True)
    profile = None if d_eff == 0 else PenaltyProfile(L, d_eff, v)
    best = None
    best_val = -math.inf
    hint = None
    for R in grid:
        if R >= c_bits or R <= 0:
            continue
        l_max = L
        if prune:
            while l_max >= 1 and not _overall(l_max, L, R) > best_val:
                l_max -= 1
            if l_max < 1:
                continue
        params = derive_params(L, a, R, v, P, d=d_eff)
        l0 = min_passing_l0(params, profile, eps0, l_max=l_max, hint=hint)
        if l0 is None:
            continue
        hint = l0
        val = _overall(l0, L, R)
        if val > best_val:
            best_val = val
            best = (params, l0, val)
    if best is None:
        return RateCurvePoint(L=L, n=None, R_bits=None, l0=None, alpha0=None,
                              overall_rate_bits=None, capacity_bits=c_bits, kind=kind,
                              d=d_eff, eps0=eps0, status="infeasible")
    params, l0, val = best
    return RateCurvePoint(L=L, n=params.n, R_bits=params.R_bits, l0=l0, alpha0=l0 / L,
                          overall_rate_bits=val, capacity_bits=c_bits, kind=kind, d=d_eff,
                          eps0=eps0, status="ok")


def _point_task(args):
    L, v, a, kind, d, eps0, fracs, P = args
    try:
        return achievable_rate(L, v, a, kind, d, eps0, fracs, P)
    except ValueError as exc:
        return RateCurvePoint(L=L, n=None, R_bits=None, l0=None, alpha0=None,
                              overall_rate_bits=None, capacity_bits=capacity_bits(v),
                              kind=kind, d=d or 0,
                              eps0=eps0, status=f"error: {exc}")


DEFAULT_L_LIST = tuple(range(20, 101, 10))


def rate_curve(v: float, kind: str, d: int | None, a: float, eps0: float = 1e-4,
               L_list=DEFAULT_L_LIST, rate_fractions=None, P: float = 1.0,
               threads: int = 1) -> list[RateCurvePoint]:
    """One point per L; per-L failures are recorded, never raised."""
    tasks = [(int(L), v, a, kind, d, eps0, rate_fractions, P) for L in L_list]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            points = list(ex.map(_point_task, tasks))
    else:
        points = [_point_task(t) for t in tasks]
    return sorted(points, key=lambda p: p.L)


def point_dict(p: RateCurvePoint) -> dict:
    return asdict(p)
