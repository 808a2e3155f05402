"""Code and channel parameters for sparse superposition codes.

Rates and capacities are carried in bits at the user-facing boundary and
converted to nats exactly once here; every exponent downstream is in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)


class ParameterError(ValueError):
    """Invalid or inconsistent code/channel parameters."""


class RateAboveCapacityError(ParameterError):
    """Requested rate is at or above the channel capacity."""


def bits_to_nats(x: float) -> float:
    return x * LN2


def nats_to_bits(x: float) -> float:
    return x / LN2


def capacity_bits(v: float) -> float:
    """AWGN capacity 0.5*log2(1+v) in bits per transmission."""
    return 0.5 * math.log2(1.0 + v)


def capacity_nats(v: float) -> float:
    return 0.5 * math.log1p(v)


def section_size(L: int, a: float) -> int:
    """M = L**a rounded to the nearest integer, ties up."""
    return int(math.floor(L ** a + 0.5))


@dataclass(frozen=True)
class CodeParams:
    L: int
    a: float
    M: int
    K: float
    R_bits: float
    R_nats: float
    n: int
    P: float
    sigma2: float
    v: float
    C_bits: float
    C_nats: float
    d: int = 0

    @property
    def Lprime(self) -> int:
        if self.d < 1:
            raise ParameterError("L' = dL is only defined for discrete dictionaries (d >= 1)")
        return self.d * self.L

    @property
    def actual_rate_bits(self) -> float:
        """K/n, never above R_bits because n is rounded up."""
        return self.K / self.n

    def with_d(self, d: int) -> "CodeParams":
        return derive_params(self.L, self.a, self.R_bits, self.v, self.P, d=d, M=self.M)

    def with_rate(self, R_bits: float) -> "CodeParams":
        return derive_params(self.L, self.a, R_bits, self.v, self.P, d=self.d, M=self.M)

    def as_dict(self) -> dict:
        return {
            "L": self.L, "a": self.a, "M": self.M, "K": self.K, "n": self.n,
            "R_bits": self.R_bits, "P": self.P, "sigma2": self.sigma2, "v": self.v,
            "C_bits": self.C_bits, "d": self.d,
        }


def derive_params(
    L: int,
    a: float,
    R_bits: float,
    v: float,
    P: float = 1.0,
    d: int = 0,
    M: int | None = None,
) -> CodeParams:
    """Derive every dependent code parameter.

    ``M`` may be given explicitly (desk-scale simulation); otherwise it is
    ``round(L**a)``. ``d = 0`` stands for the Gaussian dictionary.
    """
    if int(L) != L or L < 2:
        raise ParameterError(f"L must be an integer >= 2, got {L}")
    if not (v > 0 and math.isfinite(v)):
        raise ParameterError(f"SNR v must be positive, got {v}")
    if not P > 0:
        raise ParameterError(f"power P must be positive, got {P}")
    if not R_bits > 0:
        raise ParameterError(f"rate must be positive, got {R_bits}")
    if d < 0 or int(d) != d:
        raise ParameterError(f"d must be a non-negative integer, got {d}")
    L = int(L)
    if M is None:
        if not a > 0:
            raise ParameterError(f"section size rate a must be positive, got {a}")
        M = section_size(L, a)
    else:
        M = int(M)
        a = math.log(M) / math.log(L) if M > 1 else 0.0
    if M < 2:
        raise ParameterError(f"section size M = {M} < 2")
    c_bits = capacity_bits(v)
    if R_bits >= c_bits:
        raise RateAboveCapacityError(
            f"rate {R_bits:.6g} bits is not below capacity {c_bits:.6g} bits (v={v})"
        )
    K = L * math.log2(M)
    n = math.ceil(K / R_bits)
    # ceil can land one short when K/R is an integer up to rounding
    if n * R_bits < K:
        n += 1
    return CodeParams(
        L=L, a=float(a), M=M, K=K, R_bits=float(R_bits), R_nats=bits_to_nats(R_bits),
        n=int(n), P=float(P), sigma2=P / v, v=float(v), C_bits=c_bits,
        C_nats=capacity_nats(v), d=int(d),
    )
