"""Per-section-error union bounds and their tail sums.

Every bound is returned as a natural log and kept uncapped; callers cap at
probability one when they consume it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exponents import (
    AlphaContext,
    cap_alpha,
    exponent_h,
    log_binom,
    rate_fn_D,
    rate_fn_D1,
    s_rho1,
    s_rho2,
    s_rho_alpha,
)
from .params import CodeParams
from .penalties import PenaltyProfile, PenaltySet, first_section

GRID_POINTS = 256
T_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class RateTooHighError(ValueError):
    """C_alpha - alpha R < 0: no admissible t_alpha at this alpha."""


def _gap(ctx: AlphaContext) -> float:
    if ctx.gap < 0:
        raise RateTooHighError(
            f"C_alpha - alpha R = {ctx.gap:.3e} < 0 at l={ctx.l}; rate too high for this alpha")
    return ctx.gap


def _check_t(ctx: AlphaContext) -> None:
    gap = _gap(ctx)
    if not -1e-15 <= ctx.t_alpha <= gap + 1e-15:
        raise ValueError(f"t_alpha={ctx.t_alpha} outside [0, {gap}]")


def _two_term(log_c, n, delta, s1, t, s2, iota1, iota2):
    """ln[ C e^{-n(D1(delta,s1) - iota1)} + e^{-n(D(t,s2) - iota2)} ] (vectorised)."""
    first = log_c - n * (rate_fn_D1(delta, s1, check=False) - iota1)
    second = -n * (rate_fn_D(t, s2, check=False) - iota2)
    return np.logaddexp(first, second)


def err_gauss(ctx: AlphaContext, params: CodeParams) -> float:
    _check_t(ctx)
    return float(_two_term(log_binom(ctx.L, ctx.l), params.n, ctx.Delta_alpha, ctx.s1,
                           ctx.t_alpha, ctx.s2, 0.0, 0.0))


def err_bin(ctx: AlphaContext, params: CodeParams, penalties: PenaltySet) -> float:
    _check_t(ctx)
    if ctx.l < penalties.l0:
        raise ValueError(f"l={ctx.l} is below the penalty threshold l0={penalties.l0}")
    if penalties.iota1 is None:
        penalties.iota  # raises PenaltyRangeError
    return float(_two_term(log_binom(ctx.L, ctx.l), params.n, ctx.Delta_alpha, ctx.s1,
                           ctx.t_alpha, ctx.s2, penalties.iota1, penalties.iota2))


def err_bin_prime(ctx: AlphaContext, params: CodeParams, penalties: PenaltySet | None) -> float:
    """Single-term bound without t; ``penalties=None`` gives the Gaussian-dictionary form."""
    gap = _gap(ctx)
    iota_p = 0.0 if penalties is None else penalties.iota_prime
    return float(log_binom(ctx.L, ctx.l)
                 - params.n * (rate_fn_D1(gap, ctx.s_alpha) - iota_p))


# ---------------------------------------------------------------------------
# vectorised minimisation over t_alpha

def _minimize_two_term(log_c, n, gap, s1, s2, iota1, iota2):
    """Grid of GRID_POINTS then golden-section refinement, per element.

    Returns (t_star, log_err).  No convexity is assumed: the golden stage only
    refines the bracket around the best grid point.
    """
    log_c = np.atleast_1d(np.asarray(log_c, dtype=float))
    gap = np.atleast_1d(np.asarray(gap, dtype=float))
    s1 = np.atleast_1d(np.asarray(s1, dtype=float))
    s2 = np.atleast_1d(np.asarray(s2, dtype=float))
    iota1 = np.broadcast_to(np.asarray(iota1, dtype=float), gap.shape)
    iota2 = np.broadcast_to(np.asarray(iota2, dtype=float), gap.shape)

    cols = [x[:, None] for x in (log_c, gap, s1, s2, iota1, iota2)]

    def f(t):
        lc, g, a1, a2, i1, i2 = cols if t.ndim == 2 else (log_c, gap, s1, s2, iota1, iota2)
        return _two_term(lc, n, np.maximum(g - t, 0.0), a1, t, a2, i1, i2)

    frac = np.linspace(0.0, 1.0, GRID_POINTS)
    grid = gap[:, None] * frac[None, :]
    vals = f(grid)
    j = np.argmin(vals, axis=1)
    rows = np.arange(gap.size)
    best_t = grid[rows, j]
    best_v = vals[rows, j]

    step = gap / (GRID_POINTS - 1)
    a = np.maximum(best_t - step, 0.0)
    b = np.minimum(best_t + step, gap)
    width = float(np.max(b - a)) if gap.size else 0.0
    if width > T_TOL:
        iters = int(math.ceil(math.log(T_TOL / width) / math.log(_INV_PHI)))
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(iters):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            x = np.where(left, b - _INV_PHI * (b - a), a + _INV_PHI * (b - a))
            fx = f(x)
            c, d = np.where(left, x, d), np.where(left, c, x)
            fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
        t_g = 0.5 * (a + b)
        v_g = f(t_g)
        better = v_g < best_v
        best_t = np.where(better, t_g, best_t)
        best_v = np.where(better, v_g, best_v)
    return best_t, best_v


BOUND_KINDS = ("gauss", "bin")


def optimize_t(l: int, params: CodeParams, penalties: PenaltySet | None = None,
               bound_kind: str = "gauss") -> tuple[float, float]:
    """Minimise err_gauss or err_bin over t_alpha in [0, C_alpha - alpha R]."""
    if bound_kind not in BOUND_KINDS:
        raise ValueError(f"bound_kind must be one of {BOUND_KINDS}")
    L, v = params.L, params.v
    alpha = l / L
    gap = float(cap_alpha(alpha, v)) - alpha * params.R_nats
    if gap < 0:
        raise RateTooHighError(f"empty t interval at l={l}: C_alpha - alpha R = {gap:.3e}")
    if bound_kind == "bin":
        if penalties is None:
            raise ValueError("bound_kind='bin' needs penalties")
        iota1, iota2 = penalties.iota1, penalties.iota2
        if iota1 is None:
            penalties.iota
    else:
        iota1 = iota2 = 0.0
    t, val = _minimize_two_term(log_binom(L, l), params.n, gap, s_rho1(alpha, v),
                                s_rho2(alpha, v), iota1, iota2)
    return float(t[0]), float(val[0])


@dataclass
class SectionBounds:
    """Per-l optimised bounds for l = l_start..L (arrays aligned with ``l``)."""

    l: np.ndarray
    alpha: np.ndarray
    t_star: np.ndarray
    log_err_gauss: np.ndarray
    log_err_bin: np.ndarray  # nan when not applicable
    log_err_bin_prime: np.ndarray
    log_err_best: np.ndarray


def section_bounds(params: CodeParams, penalties: PenaltySet | None, l_start: int,
                   with_gauss: bool = True) -> SectionBounds:
    """Optimised bounds at every l in [l_start, L].

    ``penalties=None`` selects the Gaussian dictionary: the best bound is the
    smaller of err_gauss and the single-term bound with zero penalty.
    Otherwise the best bound is min(err_bin, err_bin'), and err_gauss is
    reported alongside for comparison unless ``with_gauss`` is false.
    """
    L, v, n = params.L, params.v, params.n
    l = np.arange(l_start, L + 1)
    alpha = l / L
    gap = cap_alpha(alpha, v) - alpha * params.R_nats
    if np.any(gap < 0):
        raise RateTooHighError("C_alpha - alpha R < 0 for some alpha; rate above capacity?")
    log_c = log_binom(L, l)
    s1, s2 = s_rho1(alpha, v), s_rho2(alpha, v)
    if with_gauss or penalties is None:
        t_g, log_g = _minimize_two_term(log_c, n, gap, s1, s2, 0.0, 0.0)
    else:
        t_g = log_g = np.full(l.shape, np.nan)
    iota_p = 0.0 if penalties is None else penalties.iota_prime
    log_p = log_c - n * (rate_fn_D1(gap, s_rho_alpha(alpha, v), check=False) - iota_p)
    if penalties is None:
        t_star = t_g
        log_b = np.full(l.shape, np.nan)
        best = np.minimum(log_g, log_p)
    elif penalties.iota1 is None:
        t_star = np.full(l.shape, np.nan)
        log_b = np.full(l.shape, np.nan)
        best = log_p
    else:
        t_star, log_b = _minimize_two_term(log_c, n, gap, s1, s2, penalties.iota1, penalties.iota2)
        best = np.minimum(log_b, log_p)
    return SectionBounds(l=l, alpha=alpha, t_star=t_star, log_err_gauss=log_g,
                         log_err_bin=log_b, log_err_bin_prime=log_p, log_err_best=best)


def _penalty_source(penalties):
    """Normalise fixed PenaltySet / PenaltyProfile / None into l0 -> PenaltySet|None."""
    if penalties is None:
        return lambda l0: None
    if isinstance(penalties, PenaltySet):
        def fixed(l0):
            if l0 < penalties.l0:
                raise ValueError(f"l0={l0} below the penalties' threshold {penalties.l0}")
            return penalties
        return fixed
    if isinstance(penalties, PenaltyProfile):
        return lambda l0: penalties.at(l0, strict=False)
    if callable(penalties):
        return penalties
    raise TypeError(f"unsupported penalties object {type(penalties)!r}")


def tail_bound(l0: int, params: CodeParams, penalties=None) -> float:
    """ln of sum_{l >= l0} exp(best per-l bound).

    ``penalties`` may be None (Gaussian dictionary), a fixed PenaltySet, a
    PenaltyProfile (penalties recomputed for alpha0 = l0/L), or a callable
    mapping l0 to a PenaltySet.
    """
    if not 1 <= l0 <= params.L:
        raise ValueError(f"l0 must lie in [1, L], got {l0}")
    ps = _penalty_source(penalties)(l0)
    sb = section_bounds(params, ps, l0, with_gauss=False)
    return float(logsumexp(sb.log_err_best))


@dataclass
class BoundTable:
    params: CodeParams
    penalties: PenaltySet | None
    rows: SectionBounds
    log_tail: np.ndarray  # log tail sum starting at rows.l[i]
    meta: dict = field(default_factory=dict)

    def tail(self, l0: int) -> float:
        idx = int(l0 - self.rows.l[0])
        if not 0 <= idx < len(self.rows.l):
            raise KeyError(l0)
        return float(self.log_tail[idx])

    @property
    def cumulative(self) -> dict[int, float]:
        return {int(l): float(t) for l, t in zip(self.rows.l, self.log_tail)}


def _reverse_cumulative_logsumexp(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    acc = -np.inf
    for i in range(len(x) - 1, -1, -1):
        acc = np.logaddexp(acc, x[i])
        out[i] = acc
    return out


def bound_table(params: CodeParams, penalties: PenaltySet | None = None,
                alpha0: float | None = None) -> BoundTable:
    """Per-l bounds with cumulative tails for a fixed penalty set.

    Rows start at l0 = ceil(alpha0 L), the range where the penalties are valid
    (l = 1 for the Gaussian dictionary when alpha0 is not given).
    """
    if penalties is not None:
        l_start = penalties.l0
    else:
        l_start = 1 if alpha0 is None else first_section(alpha0, params.L)
    rows = section_bounds(params, penalties, l_start)
    return BoundTable(params=params, penalties=penalties, rows=rows,
                      log_tail=_reverse_cumulative_logsumexp(rows.log_err_best))


TABLE_COLUMNS = ("l", "alpha", "t_star", "log10_err_gauss", "log10_err_bin",
                 "log10_err_bin_prime", "log10_err_best", "log10_tail_from_l")


def table_rows(table: BoundTable) -> list[list]:
    r = table.rows
    to10 = 1.0 / math.log(10.0)
    out = []
    for i in range(len(r.l)):
        out.append([
            int(r.l[i]), float(r.alpha[i]), float(r.t_star[i]),
            float(r.log_err_gauss[i]) * to10, float(r.log_err_bin[i]) * to10,
            float(r.log_err_bin_prime[i]) * to10, float(r.log_err_best[i]) * to10,
            float(table.log_tail[i]) * to10,
        ])
    return out


@dataclass(frozen=True)
class TheoremReport:
    alpha0: float
    l0: int
    achieved_exponent: float
    guaranteed_exponent: float
    h_value: float
    iota: float
    threshold_note: str
    flag: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def theorem_report(alpha0: float, params: CodeParams, penalties: PenaltySet | None = None) -> TheoremReport:
    """Compare the computed tail exponent with the guaranteed one (no assertion).

    achieved = -(1/n) ln(tail bound at ceil(alpha0 L)); guaranteed =
    h(alpha0, C - R) - ln(2L)/n - iota(L), with iota = 0 for the Gaussian
    dictionary.
    """
    l0 = first_section(alpha0, params.L) if penalties is None else penalties.l0
    achieved = -tail_bound(l0, params, penalties) / params.n
    h_val = exponent_h(alpha0, params.C_nats - params.R_nats, params.v)
    iota = 0.0
    if penalties is not None:
        iota = penalties.iota if penalties.iota1 is not None else math.nan
    guaranteed = h_val - math.log(2 * params.L) / params.n - iota
    if penalties is not None and params.d >= 1:
        note = (f"binomial dictionary: exponentially small block error needs C - R = "
                f"Omega(1/(L')^(1/4)), (L')^(-1/4) = {(params.d * params.L) ** -0.25:.4g}")
    else:
        note = "Gaussian dictionary: C - R = Omega(sqrt(log L / n))"
    if not guaranteed > 0:
        flag = "no guarantee"
    elif achieved < guaranteed:
        flag = "achieved below guaranteed (a >= a_{v,L} may not hold, or regimes differ)"
    else:
        flag = "ok"
    return TheoremReport(alpha0=alpha0, l0=l0, achieved_exponent=achieved,
                         guaranteed_exponent=guaranteed, h_value=h_val, iota=iota,
                         threshold_note=note, flag=flag)
