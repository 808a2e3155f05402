"""Numerical checks of the lattice-sum versus Gaussian-integral inequalities.

A lattice with n + 1 points x = h(k - n/2), h = 2/sqrt(n), replaces one
coordinate of a Gaussian integral by a Riemann sum.  The inequalities state
that the sum exceeds the integral by at most a factor 1 + eta*A_ii/n per
discretised coordinate.  The continuous coordinate is integrated exactly
through a Schur complement, so only 1-D or 2-D lattice sums remain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .exponents import s_rho2, s_rho_alpha
from .penalties import ETA

REL_SLACK = 1e-12
TRUNC_SD = 40.0  # lattice terms beyond this many standard deviations are dropped
_ROW_BLOCK = 256


@dataclass(frozen=True)
class LatticeReport:
    dim: int
    n: int
    nprime: int | None
    I_d: float
    I_c: float
    factor: float  # (1 + eta A11/n) or its 3-D product
    passed: bool

    @property
    def ratio(self) -> float:
        return self.I_d / self.I_c


def lattice(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("lattice needs n >= 1")
    h = 2.0 / math.sqrt(n)
    return h * (np.arange(n + 1) - n / 2.0)


def is_positive_definite(A) -> bool:
    """All leading principal minors strictly positive."""
    A = np.asarray(A, dtype=float)
    return all(np.linalg.det(A[:k, :k]) > 0 for k in range(1, A.shape[0] + 1))


def _check_pd(A, dim):
    A = np.asarray(A, dtype=float)
    if A.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix")
    if not np.allclose(A, A.T, rtol=0, atol=0):
        raise ValueError("matrix must be symmetric")
    if not is_positive_definite(A):
        raise ValueError("matrix is not strictly positive definite")
    return A


def lattice_sum_1d(n: int, s2: float, mu: float = 0.0) -> float:
    """h * sum exp(-s2 (x - mu)^2 / 2) over the lattice, compensated summation."""
    x = lattice(n)
    keep = np.abs(x - mu) <= TRUNC_SD / math.sqrt(s2)
    terms = np.exp(-0.5 * s2 * (x[keep] - mu) ** 2)
    return (2.0 / math.sqrt(n)) * math.fsum(terms)


def lattice_sum_2d(n: int, nprime: int, S) -> float:
    """h1 h2 * double lattice sum of exp(-x^T S x / 2).

    Rows of x1 outside the marginal window are skipped; within a block of rows
    x2 is restricted to the union of the conditional windows.  Row sums are
    combined with fsum.
    """
    S = np.asarray(S, dtype=float)
    x1 = lattice(n)
    x2 = lattice(nprime)
    h1, h2 = 2.0 / math.sqrt(n), 2.0 / math.sqrt(nprime)
    det = S[0, 0] * S[1, 1] - S[0, 1] ** 2
    x1 = x1[np.abs(x1) <= TRUNC_SD / math.sqrt(det / S[1, 1])]
    half = TRUNC_SD / math.sqrt(S[1, 1])
    rows = []
    for b in range(0, len(x1), _ROW_BLOCK):
        xb = x1[b:b + _ROW_BLOCK]
        centers = -S[0, 1] / S[1, 1] * xb
        lo = np.searchsorted(x2, centers.min() - half, side="left")
        hi = np.searchsorted(x2, centers.max() + half, side="right")
        if hi <= lo:
            continue
        y = x2[lo:hi]
        q = S[0, 0] * xb[:, None] ** 2 + 2.0 * S[0, 1] * xb[:, None] * y + S[1, 1] * y ** 2
        rows.append(np.exp(-0.5 * q).sum(axis=1))
    if not rows:
        return 0.0
    return h1 * h2 * math.fsum(np.concatenate(rows))


def gaussian_integral(A) -> float:
    """Integral of exp(-x^T A x / 2) over R^k."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k = A.shape[0]
    return (2.0 * math.pi) ** (k / 2.0) / math.sqrt(np.linalg.det(A))


def verify_1d(n: int, s2: float, mu: float = 0.0) -> LatticeReport:
    if n < 1 or not s2 > 0:
        raise ValueError("need n >= 1 and s2 > 0")
    I_d = lattice_sum_1d(n, s2, mu)
    I_c = math.sqrt(2.0 * math.pi / s2)
    factor = 1.0 + ETA * s2 / n
    return LatticeReport(1, n, None, I_d, I_c, factor, bool(I_d <= factor * I_c * (1 + REL_SLACK)))


def reduce_2d(n: int, A) -> float:
    """I_d for the 2-D lemma: x2 integrated out leaves a 1-D lattice sum."""
    A = np.asarray(A, dtype=float)
    schur = (A[0, 0] * A[1, 1] - A[0, 1] ** 2) / A[1, 1]
    return math.sqrt(2.0 * math.pi / A[1, 1]) * lattice_sum_1d(n, schur)


def reduce_3d(n: int, nprime: int, A) -> float:
    """I_d for the 3-D lemma: x3 integrated out leaves a 2-D lattice sum."""
    A = np.asarray(A, dtype=float)
    a = A[:2, 2]
    S = A[:2, :2] - np.outer(a, a) / A[2, 2]
    return math.sqrt(2.0 * math.pi / A[2, 2]) * lattice_sum_2d(n, nprime, S)


def verify_2d(n: int, A) -> LatticeReport:
    A = _check_pd(A, 2)
    if n < 1:
        raise ValueError("need n >= 1")
    I_d = reduce_2d(n, A)
    I_c = gaussian_integral(A)
    factor = 1.0 + ETA * A[0, 0] / n
    factor = float(factor)
    return LatticeReport(2, n, None, I_d, I_c, factor, bool(I_d <= factor * I_c * (1 + REL_SLACK)))


def verify_3d(n: int, nprime: int, A) -> LatticeReport:
    A = _check_pd(A, 3)
    if n < 1 or nprime < 1:
        raise ValueError("need n, n' >= 1")
    I_d = reduce_3d(n, nprime, A)
    I_c = gaussian_integral(A)
    factor = (1.0 + ETA * A[0, 0] / n) * (1.0 + ETA * A[1, 1] / nprime)
    factor = float(factor)
    return LatticeReport(3, n, nprime, I_d, I_c, factor,
                         bool(I_d <= factor * I_c * (1 + REL_SLACK)))


# ---------------------------------------------------------------------------
# Brute-force cross checks (small n only).

def _trapezoid_line(half_width: float, step: float) -> tuple[np.ndarray, float]:
    m = int(math.ceil(half_width / step))
    return np.arange(-m, m + 1) * step, step


def brute_2d(n: int, A, step: float = 0.01) -> float:
    """Lattice in x1, trapezoid rule in x2 (no Schur complement)."""
    A = np.asarray(A, dtype=float)
    x1 = lattice(n)[:, None]
    x2, dx = _trapezoid_line(TRUNC_SD / math.sqrt(np.linalg.eigvalsh(A)[0]), step)
    q = A[0, 0] * x1 ** 2 + 2 * A[0, 1] * x1 * x2 + A[1, 1] * x2 ** 2
    return (2.0 / math.sqrt(n)) * dx * float(np.exp(-0.5 * q).sum())


def brute_3d(n: int, nprime: int, A, step: float = 0.02) -> float:
    A = np.asarray(A, dtype=float)
    x1 = lattice(n)[:, None, None]
    x2 = lattice(nprime)[None, :, None]
    x3, dx = _trapezoid_line(TRUNC_SD / math.sqrt(np.linalg.eigvalsh(A)[0]), step)
    x3 = x3[None, None, :]
    q = (A[0, 0] * x1 ** 2 + A[1, 1] * x2 ** 2 + A[2, 2] * x3 ** 2
         + 2 * A[0, 1] * x1 * x2 + 2 * A[0, 2] * x1 * x3 + 2 * A[1, 2] * x2 * x3)
    h = 2.0 / math.sqrt(n) * 2.0 / math.sqrt(nprime)
    return h * dx * float(np.exp(-0.5 * q).sum())


def quadrature_integral(A, half_sd: float = 10.0, step_sd: float = 0.8) -> float:
    """Tensor trapezoid rule for the Gaussian integral (spectrally accurate)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k = A.shape[0]
    eig = np.linalg.eigvalsh(A)
    x, dx = _trapezoid_line(half_sd / math.sqrt(eig[0]), step_sd / math.sqrt(eig[-1]))
    grids = np.meshgrid(*([x] * k), indexing="ij")
    pts = np.stack([g.ravel() for g in grids])
    q = np.einsum("ip,ij,jp->p", pts, A, pts)
    return dx ** k * math.fsum(np.exp(-0.5 * q))


# ---------------------------------------------------------------------------
# Matrices from the exponent calculations.

@dataclass(frozen=True)
class ProofMatrix:
    name: str
    alpha: float
    v: float
    lam: float
    B: np.ndarray
    A: np.ndarray  # I - lam * B
    positive_definite: bool


def _wrap(name, alpha, v, lam, B) -> ProofMatrix:
    A = np.eye(B.shape[0]) - lam * B
    return ProofMatrix(name, alpha, v, lam, B, A, is_positive_definite(A))


def _check_alpha_v(alpha, v):
    if not 0 < alpha <= 1 or not v > 0:
        raise ValueError("need alpha in (0, 1] and v > 0")


def build_B(alpha: float, v: float, lam: float = 0.0) -> ProofMatrix:
    """B = (1 - rho_2^2) [[-1, 1/(alpha sqrt v)], [1/(alpha sqrt v), 1]]."""
    _check_alpha_v(alpha, v)
    s = float(s_rho2(alpha, v))
    c = 1.0 / (alpha * math.sqrt(v))
    return _wrap("B", alpha, v, lam, s * np.array([[-1.0, c], [c, 1.0]]))


def build_B_prime(alpha: float, v: float, lam: float = 0.0) -> ProofMatrix:
    """B' = (1 - rho_alpha^2) [[-1, -1/sqrt(alpha v)], [-1/sqrt(alpha v), 1]]."""
    _check_alpha_v(alpha, v)
    s = float(s_rho_alpha(alpha, v))
    c = -1.0 / math.sqrt(alpha * v)
    return _wrap("B_prime", alpha, v, lam, s * np.array([[-1.0, c], [c, 1.0]]))


def build_B_tilde(alpha: float, v: float, lam: float = 0.0, sign22: int = -1) -> ProofMatrix:
    """3x3 matrix for the case with both lattice coordinates.

    ``sign22`` selects the sign of the (2,2) entry, +-alpha^2(1-alpha)v/(1+alpha^2 v).
    """
    _check_alpha_v(alpha, v)
    if sign22 not in (-1, 1):
        raise ValueError("sign22 must be -1 or +1")
    av, a2v = alpha * v, alpha * alpha * v
    sav = math.sqrt(av)
    b11 = av / (1 + av) - alpha ** 3 * v / (1 + a2v)
    b12 = -alpha ** 2 * math.sqrt(alpha * (1 - alpha)) * v / (1 + a2v)
    b13 = sav / (1 + av) - alpha * sav / (1 + a2v)
    b22 = sign22 * alpha ** 2 * (1 - alpha) * v / (1 + a2v)
    b23 = -alpha * math.sqrt((1 - alpha) * v) / (1 + a2v)
    b33 = 1 / (1 + av) - 1 / (1 + a2v)
    B = np.array([[b11, b12, b13], [b12, b22, b23], [b13, b23, b33]])
    name = "B_tilde" if sign22 == -1 else "B_tilde_plus"
    return _wrap(name, alpha, v, lam, B)


def tilde_diagonal_claims(alpha: float, v: float, lam: float, sign22: int = -1) -> tuple[bool, bool]:
    """(A~11 <= 1, A~22 <= 1) for A~ = I - lam B~."""
    A = build_B_tilde(alpha, v, lam, sign22).A
    return bool(A[0, 0] <= 1.0), bool(A[1, 1] <= 1.0)


# ---------------------------------------------------------------------------
# Randomised audits.

AUDIT_COLUMNS = ("lemma", "case", "source", "n", "nprime", "params", "I_d", "I_c", "factor",
                 "ratio", "status")


@dataclass(frozen=True)
class AuditRow:
    lemma: int
    case: int
    source: str
    n: int
    nprime: int | None
    params: str
    I_d: float
    I_c: float
    factor: float
    ratio: float
    status: str

    def row(self) -> list:
        return [getattr(self, c) for c in AUDIT_COLUMNS]


def _row(lemma, case, source, rep: LatticeReport, params: str) -> AuditRow:
    return AuditRow(lemma, case, source, rep.n, rep.nprime, params, rep.I_d, rep.I_c,
                    rep.factor, rep.ratio, "PASS" if rep.passed else "FAIL")


def _random_spd(rng, k):
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    eig = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), size=k))
    A = Q @ np.diag(eig) @ Q.T
    return 0.5 * (A + A.T)


def proof_matrix_cases(sign22: int = -1) -> list[tuple[ProofMatrix, int, int | None]]:
    """Positive-definite I - lam B matrices over an (alpha, v, lam) grid, with lattice sizes."""
    out = []
    for v in (1.0, 5.0, 20.0, 100.0):
        for lam in (0.1, 0.3, 0.5, 0.8, 1.0):
            for L, d, l in ((10, 10, 3), (20, 5, 10), (8, 25, 6), (16, 3, 2)):
                alpha = l / L
                for pm in (build_B(alpha, v, lam), build_B_prime(alpha, v, lam)):
                    if pm.positive_definite:
                        n = d * L if pm.name == "B" else d * l
                        out.append((pm, n, None))
                pm = build_B_tilde(alpha, v, lam, sign22)
                if pm.positive_definite:
                    out.append((pm, d * l, d * (L - l)))
    return out


def audit(cases: int = 1000, seed: int = 1, proof_cases: bool = True) -> list[AuditRow]:
    """Randomised audit of all three inequalities; each case has its own seed."""
    rows: list[AuditRow] = []
    proofs = proof_matrix_cases() if proof_cases else []
    for lemma in (1, 2, 3):
        fixed = [c for c in proofs if c[0].A.shape[0] == lemma]
        for i in range(cases):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(lemma, i)))
            if i < len(fixed):
                pm, n, nprime = fixed[i]
                tag = f"alpha={pm.alpha:.6g};v={pm.v:g};lam={pm.lam:g}"
                rep = verify_2d(n, pm.A) if lemma == 2 else verify_3d(n, nprime, pm.A)
                rows.append(_row(lemma, i, pm.name, rep, tag))
                continue
            if lemma == 1:
                n = int(rng.integers(1, 10_001))
                s2 = float(np.exp(rng.uniform(math.log(1e-3), math.log(1e3))))
                mu = float(rng.uniform(-3 * math.sqrt(n), 3 * math.sqrt(n)))
                rep = verify_1d(n, s2, mu)
                tag = f"s2={s2:.17g};mu={mu:.17g}"
            elif lemma == 2:
                n = int(rng.integers(1, 10_001))
                A = _random_spd(rng, 2)
                rep = verify_2d(n, A)
                tag = "A=" + ";".join(f"{x:.17g}" for x in A.ravel())
            else:
                n = int(rng.integers(1, 301))
                nprime = int(rng.integers(1, 301))
                A = _random_spd(rng, 3)
                rep = verify_3d(n, nprime, A)
                tag = "A=" + ";".join(f"{x:.17g}" for x in A.ravel())
            rows.append(_row(lemma, i, "random", rep, tag))
    return rows


def write_audit_csv(rows: list[AuditRow], path, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AUDIT_COLUMNS)
        for r in rows:
            w.writerow(["" if x is None else (repr(x) if isinstance(x, float) else x)
                        for x in r.row()])


def audit_summary(rows: list[AuditRow]) -> dict:
    out = {}
    for lemma in sorted({r.lemma for r in rows}):
        sub = [r for r in rows if r.lemma == lemma]
        out[lemma] = {"cases": len(sub), "proof_cases": sum(r.source != "random" for r in sub),
                      "failures": sum(r.status == "FAIL" for r in sub),
                      "max_ratio_over_factor": float(max(r.ratio / r.factor for r in sub))}
    return out


def report_dict(rep: LatticeReport) -> dict:
    return {**asdict(rep), "ratio": rep.ratio}
