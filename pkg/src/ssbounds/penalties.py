"""Exponent penalties paid by the binomial dictionary.

Each penalty is a maximum over an integer range of section-error counts
``l``; everything is accumulated in the log domain.  ``PenaltyProfile``
caches phi(d*l) once per (L, d, v) so that penalties for every threshold
``l0 = ceil(alpha0 * L)`` come from suffix maxima without rescanning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exponents import phi_values

ETA = math.sqrt(9.0 / (8.0 * math.pi * math.e))


class PenaltyRangeError(ValueError):
    """Both iota_4 and iota_5 ranges are empty, so iota_1 cannot be formed."""


def eta() -> float:
    return ETA


def first_section(alpha0: float, L: int) -> int:
    """Smallest integer l with l >= alpha0 * L (and l >= 1)."""
    x = alpha0 * L
    l0 = math.ceil(x)
    if l0 - 1 >= x - 1e-9 * max(1.0, abs(x)):
        l0 -= 1  # x was an integer up to rounding
    return max(1, int(l0))


@dataclass(frozen=True)
class PenaltySet:
    L: int
    d: int
    alpha0: float
    v: float
    l0: int
    eta: float
    iota1: float | None
    iota2: float
    iota3: float
    iota4: float | None
    iota5: float | None
    iota_prime: float

    @property
    def iota(self) -> float:
        if self.iota1 is None:
            raise PenaltyRangeError(self._range_msg())
        return max(self.iota1, self.iota2)

    def _range_msg(self) -> str:
        return (f"iota_4 and iota_5 ranges are both empty for L={self.L}, d={self.d}, "
                f"l0={self.l0}; iota_1 is undefined")

    def as_dict(self) -> dict:
        return {
            "L": self.L, "d": self.d, "alpha0": self.alpha0, "v": self.v, "l0": self.l0,
            "eta": self.eta, "iota1": self.iota1, "iota2": self.iota2, "iota3": self.iota3,
            "iota4": self.iota4, "iota5": self.iota5, "iota_prime": self.iota_prime,
        }


def _suffix_max(x: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(x[::-1])[::-1]


class PenaltyProfile:
    """Penalties for every threshold l0 in 1..L at fixed (L, d, v)."""

    def __init__(self, L: int, d: int, v: float):
        if L < 2:
            raise ValueError("penalties need L >= 2")
        if d < 1:
            raise ValueError("penalties need d >= 1")
        if not v > 0:
            raise ValueError("SNR must be positive")
        self.L, self.d, self.v = int(L), int(d), float(v)
        l = np.arange(1, L + 1)
        dl = d * l.astype(float)
        self.phi_dl = phi_values(d * l)  # phi(d*l), l = 1..L
        self.phi_dL = float(self.phi_dl[-1])
        self.iota2 = self.phi_dL + math.log1p(2.0 * ETA / (d * L))

        # log(1 + iota3) candidates, l = 1..L
        self._log3 = self.phi_dl + np.log1p(ETA * (1.0 + v) / dl)
        self._log3_suffix = _suffix_max(self._log3)

        root = math.sqrt(L / d)
        self.iota4_hi = math.floor(L - root)
        self.iota5_lo = max(math.ceil(L - root), 1)
        # log(1 + iota4) candidates for l = 1..L-1, phi(d(L-l)) uses reversed array
        lm = np.arange(1, L)
        phi_rest = self.phi_dl[: L - 1][::-1]  # phi(d(L-l)) for l = 1..L-1
        self._log4 = (self.phi_dl[: L - 1] + phi_rest
                      + np.log1p(ETA / (d * lm)) + np.log1p(ETA / (d * (L - lm))))
        # log(1 + iota5) candidates for l = 1..L-1
        denom = 1.0 - 1.0 / math.sqrt(d * L)
        self._log5 = (self.phi_dl[: L - 1] - 0.5 * math.log(denom)
                      + np.log1p(ETA / (d * lm)))
        if self.iota5_lo <= L - 1:
            self.log1p_iota5 = float(np.max(self._log5[self.iota5_lo - 1:]))
        else:
            self.log1p_iota5 = None

        # iota' candidates, l = 1..L
        self._prime = 2.0 * self.phi_dl + np.log1p(ETA * (1.0 + v) / dl) + np.log1p(2.0 * ETA / dl)
        self._prime_suffix = _suffix_max(self._prime)

    def at(self, l0: int, strict: bool = True) -> PenaltySet:
        L, d = self.L, self.d
        if not 1 <= l0 <= L:
            raise ValueError(f"l0 must lie in [1, {L}], got {l0}")
        log1p3 = float(self._log3_suffix[l0 - 1])
        hi4 = min(self.iota4_hi, L - 1)
        if l0 <= hi4:
            log1p4 = float(np.max(self._log4[l0 - 1: hi4]))
        else:
            log1p4 = None
        log1p5 = self.log1p_iota5
        present = [x for x in (log1p4, log1p5) if x is not None]
        iota1 = log1p3 + max(present) if present else None
        ps = PenaltySet(
            L=L, d=d, alpha0=l0 / L, v=self.v, l0=l0, eta=ETA, iota1=iota1, iota2=self.iota2,
            iota3=math.expm1(log1p3),
            iota4=None if log1p4 is None else math.expm1(log1p4),
            iota5=None if log1p5 is None else math.expm1(log1p5),
            iota_prime=float(self._prime_suffix[l0 - 1]),
        )
        if strict and iota1 is None:
            raise PenaltyRangeError(ps._range_msg())
        return ps


def compute_penalties(L: int, d: int, alpha0: float, v: float) -> PenaltySet:
    if not 0 < alpha0 <= 1:
        raise ValueError(f"alpha0 must lie in (0, 1], got {alpha0}")
    ps = PenaltyProfile(L, d, v).at(first_section(alpha0, L))
    return PenaltySet(**{**ps.__dict__, "alpha0": float(alpha0)})
