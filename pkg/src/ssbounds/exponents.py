"""Scalar exponent functions for ML decoding of sparse superposition codes.

All quantities are in nats.  ``s`` arguments are the ``1 - rho**2`` values
that appear in the large-deviation exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

# Exponent of a Chernoff bound with unbounded tilt.
UNBOUNDED = math.inf


def cap_alpha(alpha, v):
    """C_alpha = 0.5*ln(1 + alpha*v)."""
    return 0.5 * np.log1p(np.multiply(alpha, v))


def s_rho1(alpha, v):
    """1 - rho_1**2 = alpha(1-alpha)v / (1+alpha v)."""
    alpha = np.asarray(alpha, dtype=float)
    return alpha * (1.0 - alpha) * v / (1.0 + alpha * v)


def s_rho2(alpha, v):
    """1 - rho_2**2 = alpha**2 v / (1 + alpha**2 v)."""
    alpha = np.asarray(alpha, dtype=float)
    a2v = alpha * alpha * v
    return a2v / (1.0 + a2v)


def s_rho_alpha(alpha, v):
    """1 - rho_alpha**2 = alpha v / (1 + alpha v)."""
    alpha = np.asarray(alpha, dtype=float)
    return alpha * v / (1.0 + alpha * v)


def _check_ds(delta, s):
    if np.any(np.asarray(delta) < 0):
        raise ValueError("Delta must be non-negative")
    s_arr = np.asarray(s)
    if np.any(s_arr < 0) or np.any(s_arr >= 1):
        raise ValueError("s = 1 - rho^2 must lie in [0, 1)")


def optimal_lambda(delta, s):
    """Unconstrained maximiser of lambda*Delta + 0.5*ln(1 - lambda**2 s).

    Written as 2D / (sqrt(s^2 + 4 D^2 s) + s), which has no cancellation at
    small Delta and gives +inf when s = 0 < Delta.  (0, 0) yields nan.
    """
    delta = np.asarray(delta, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2.0 * delta / (np.sqrt(s * s + 4.0 * delta * delta * s) + s)


def _objective(lam, delta, s):
    return lam * delta + 0.5 * np.log1p(-lam * lam * s)


def rate_fn_D(delta, s, check=True):
    """D(Delta, s) = sup_{lambda >= 0} {lambda Delta + 0.5 ln(1 - lambda^2 s)}.

    Returns ``inf`` (UNBOUNDED) for Delta > 0 and s = 0.
    """
    if check:
        _check_ds(delta, s)
    lam = optimal_lambda(delta, s)
    with np.errstate(invalid="ignore"):
        val = _objective(lam, delta, s)
    if check:
        val = np.where(np.isinf(lam), UNBOUNDED, val)
        val = np.where(np.asarray(delta) == 0.0, 0.0, val)
    return val[()] if np.ndim(val) == 0 else val


def rate_fn_D1(delta, s, check=True):
    """D_1: the same supremum restricted to 0 <= lambda <= 1."""
    if check:
        _check_ds(delta, s)
    # fmin drops the nan of (0, 0), where lambda = 1 gives the right value 0
    lam = np.fmin(optimal_lambda(delta, s), 1.0)
    val = _objective(lam, delta, s)
    return val[()] if np.ndim(val) == 0 else val


def gap_fn_g(x):
    """g(x) = sqrt(1 + 4x^2) - 1."""
    x = np.asarray(x, dtype=float)
    # sqrt(1+y)-1 = y/(sqrt(1+y)+1)
    y = 4.0 * x * x
    out = y / (np.sqrt(1.0 + y) + 1.0)
    return out[()] if out.ndim == 0 else out


def weight_w(v: float) -> float:
    return v / (4.0 * (1.0 + v) ** 2 * math.sqrt(1.0 + 0.25 * v ** 3 / (1.0 + v)))


def exponent_h(alpha: float, delta: float, v: float) -> float:
    """h(alpha, Delta) = min{alpha w_v Delta, g(Delta/(2 sqrt v))/4}."""
    if delta < 0:
        raise ValueError("Delta must be non-negative")
    return min(alpha * weight_w(v) * delta, 0.25 * float(gap_fn_g(delta / (2.0 * math.sqrt(v)))))


def log_binom(L, l):
    """ln C(L, l) via log-gamma."""
    L = np.asarray(L, dtype=float)
    l = np.asarray(l, dtype=float)
    out = gammaln(L + 1.0) - gammaln(l + 1.0) - gammaln(L - l + 1.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class AlphaContext:
    l: int
    L: int
    alpha: float
    C_alpha: float
    s1: float
    s2: float
    s_alpha: float
    gap: float  # C_alpha - alpha R, the admissible range of t
    t_alpha: float

    @property
    def Delta_alpha(self) -> float:
        return max(self.gap - self.t_alpha, 0.0)


def alpha_context(l: int, L: int, v: float, R_nats: float, t_alpha: float | None = None) -> AlphaContext:
    if not 1 <= l <= L:
        raise ValueError(f"need 1 <= l <= L, got l={l}, L={L}")
    alpha = l / L
    c_a = float(cap_alpha(alpha, v))
    gap = c_a - alpha * R_nats
    if t_alpha is None:
        t_alpha = 0.0
    return AlphaContext(
        l=l, L=L, alpha=alpha, C_alpha=c_a, s1=float(s_rho1(alpha, v)),
        s2=float(s_rho2(alpha, v)), s_alpha=float(s_rho_alpha(alpha, v)),
        gap=gap, t_alpha=float(t_alpha),
    )


# ---------------------------------------------------------------------------
# phi(l): log-ratio bound between the symmetric binomial pmf and its Gaussian
# approximation.

_LN2_MINUS_HALF = math.log(2.0) - 0.5


def _c_zeta(z):
    return 1.0 / (1.0 + 2.0 * z) ** 2 + 1.0 / (1.0 - 2.0 * z) ** 2


def phi_branches(zeta, l):
    """The three arguments of the max defining phi_zeta(l)."""
    zeta = np.asarray(zeta, dtype=float)
    l = np.asarray(l, dtype=float)
    c = _c_zeta(zeta)
    b1 = (3.0 / 16.0 * c * c + 1.0 / 12.0) / l
    b2 = -(4.0 * zeta ** 4 / 3.0) * l + np.log(l / 2.0) + 1.0 / (12.0 * l)
    b3 = -_LN2_MINUS_HALF * l + 0.5 * np.log(np.pi * l / 2.0)
    return b1, b2, b3 + 0.0 * zeta


def phi_zeta(zeta, l):
    b1, b2, b3 = phi_branches(zeta, l)
    return np.maximum(np.maximum(b1, b2), b3)


def _phi_core(l):
    """Vectorised infimum over zeta in (0, 1/2).

    Branch 1 increases in zeta, branch 2 decreases and branch 3 is constant,
    so the infimum sits where branches 1 and 2 cross, or at zeta -> 0 when
    branch 1 already dominates there.  Bisection runs until the bracket stops
    shrinking in floating point.
    """
    l = np.atleast_1d(np.asarray(l, dtype=float))
    lo = np.zeros_like(l)
    hi = np.full_like(l, 0.5)
    b1_0, b2_0, _ = phi_branches(0.0, l)
    at_zero = b1_0 >= b2_0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        b1, b2, _ = phi_branches(mid, l)
        up = b1 >= b2
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    zeta = np.where(at_zero, 0.0, hi)
    b1, b2, b3 = phi_branches(zeta, l)
    value = np.maximum(np.maximum(b1, b2), b3)
    return zeta, value, b1, b2, b3


def phi_values(l):
    """phi(l) for an array of positive integers."""
    l = np.asarray(l)
    if np.any(l < 1):
        raise ValueError("phi is defined for l >= 1")
    return _phi_core(l)[1]


@dataclass(frozen=True)
class PhiEval:
    l: int
    zeta_star: float  # 0.0 means the infimum is the limit zeta -> 0+
    phi: float
    branches: tuple[float, float, float]


def phi(l: int) -> PhiEval:
    if int(l) != l or l < 1:
        raise ValueError(f"phi needs a natural number l >= 1, got {l}")
    z, val, b1, b2, b3 = _phi_core(l)
    return PhiEval(l=int(l), zeta_star=float(z[0]), phi=float(val[0]),
                   branches=(float(b1[0]), float(b2[0]), float(b3[0])))


@dataclass(frozen=True)
class BinomialRatioReport:
    l: int
    log_max_ratio: float
    argmax_k: int
    phi: float
    passed: bool

    @property
    def max_ratio(self) -> float:
        return math.exp(self.log_max_ratio)


def log_binomial_gaussian_ratio(l: int) -> np.ndarray:
    """ln[C(l,k) 2^-l / N(k | l/2, l/4)] for k = 0..l, standard normal density."""
    k = np.arange(l + 1, dtype=float)
    log_pmf = log_binom(l, k) - l * math.log(2.0)
    var = l / 4.0
    log_dens = -0.5 * math.log(2.0 * math.pi * var) - (k - l / 2.0) ** 2 / (2.0 * var)
    return np.atleast_1d(log_pmf - log_dens)


def verify_binomial_ratio(l: int, cap: int = 4096) -> BinomialRatioReport:
    if l < 1:
        raise ValueError("l must be >= 1")
    if l > cap:
        raise ValueError(f"l={l} exceeds brute-force cap {cap}")
    r = log_binomial_gaussian_ratio(l)
    k = int(np.argmax(r))
    p = phi(l).phi
    return BinomialRatioReport(l=l, log_max_ratio=float(r[k]), argmax_k=k, phi=p,
                               passed=bool(r[k] <= p))
