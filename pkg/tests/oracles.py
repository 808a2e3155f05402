"""Independent reference computations shared by the tests.

Nothing here calls the closed forms under test; each oracle evaluates the
defining sup/inf directly on grids, in high precision, or by exhaustive scan.
"""

import math

import mpmath as mp
import numpy as np


def sup_grid(f, lo, hi, points=100_001, rounds=6):
    """Maximise f on [lo, hi] by repeated zooming grids; returns (x, f(x))."""
    for _ in range(rounds):
        x = np.linspace(lo, hi, points)
        y = f(x)
        i = int(np.nanargmax(y))
        step = (hi - lo) / (points - 1)
        lo, hi = max(x[0], x[i] - 2 * step), min(x[-1], x[i] + 2 * step)
    return float(x[i]), float(y[i])


def D_oracle(delta, s, lam_max=None):
    """sup over lambda in [0, lam_max] of lambda*delta + 0.5 ln(1 - lambda^2 s)."""
    top = 1.0 / math.sqrt(s) if s > 0 else 1e6
    top = top * (1 - 1e-15) if lam_max is None else min(lam_max, top * (1 - 1e-15))

    def f(lam):
        with np.errstate(divide="ignore", invalid="ignore"):
            return lam * delta + 0.5 * np.log1p(-lam * lam * s)
    return sup_grid(f, 0.0, top)


def phi_branch_max(zeta, l):
    zeta = np.asarray(zeta, dtype=float)
    c = 1 / (1 + 2 * zeta) ** 2 + 1 / (1 - 2 * zeta) ** 2
    b1 = (3 / 16 * c * c + 1 / 12) / l
    b2 = -(4 * zeta ** 4 / 3) * l + np.log(l / 2) + 1 / (12 * l)
    b3 = -(math.log(2) - 0.5) * l + 0.5 * math.log(math.pi * l / 2)
    return np.maximum(np.maximum(b1, b2), b3)


def phi_grid(l):
    """Minimum over the fixed grid zeta = 0.001, ..., 0.499."""
    z = np.arange(1, 500) / 1000.0
    return float(phi_branch_max(z, l).min())


def phi_zoom(l, width_floor=1e-14):
    """Infimum over (0, 1/2) by repeated 1001-point grids around the best point."""
    lo, hi = 1e-15, 0.5 - 1e-15
    best = math.inf
    while hi - lo > width_floor:
        z = np.linspace(lo, hi, 1001)
        y = phi_branch_max(z, l)
        i = int(np.argmin(y))
        best = min(best, float(y[i]))
        step = z[1] - z[0]
        lo, hi = max(1e-300, z[i] - step), min(0.5 - 1e-15, z[i] + step)
    return best


def mp_D(delta, s, lam_cap=None):
    """High-precision D / D_1 via the root of the stationarity condition."""
    delta, s = mp.mpf(delta), mp.mpf(s)
    if delta == 0:
        return mp.mpf(0)
    lam = 2 * delta / (mp.sqrt(s * s + 4 * delta * delta * s) + s) if s > 0 else mp.inf
    if s > 0:
        lam = mp.findroot(lambda x: delta * (1 - x * x * s) - x * s, lam)
    if lam_cap is not None:
        lam = min(lam, mp.mpf(lam_cap))
    return lam * delta + mp.log(1 - lam * lam * s) / 2


def mp_err_gauss(L, l, n, v, R_nats, t):
    """ln[C(L,l) e^{-n D_1(Delta, s1)} + e^{-n D(t, s2)}] at 40 digits."""
    with mp.workdps(40):
        a = mp.mpf(l) / L
        v = mp.mpf(v)
        gap = mp.log(1 + a * v) / 2 - a * mp.mpf(R_nats)
        s1 = a * (1 - a) * v / (1 + a * v)
        s2 = a * a * v / (1 + a * a * v)
        t = mp.mpf(t)
        term1 = mp.binomial(L, l) * mp.exp(-n * mp_D(gap - t, s1, lam_cap=1))
        term2 = mp.exp(-n * mp_D(t, s2))
        return float(mp.log(term1 + term2))
