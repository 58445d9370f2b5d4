"""Entropy functionals and the ball/segment/tube geometry on states.

All entropies are in nats.  The matrix norm written ``opnorm`` is the
operator norm (largest singular value), which for Hermitian differences is
the largest absolute eigenvalue; this is the norm under which the tube
membership and ball membership tests are stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidStateError, RegimeError

EIG_CLAMP = 1e-10
LOG_FLOOR = 1e-300


def _clamped_spectrum(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of (rho + rho*)/2 with tiny negatives clamped to zero."""
    rho = np.asarray(rho, dtype=complex)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -EIG_CLAMP:
        raise InvalidStateError(f"eigenvalue {lam.min():.3e} below -{EIG_CLAMP:.0e}")
    return np.clip(lam, 0.0, None)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr rho ln rho with the 0 ln 0 := 0 convention.

    Round-off can push an eigenvalue of a pure state a hair above 1; the
    result is floored at 0 so the entropy contract (value >= 0) holds.
    """
    lam = _clamped_spectrum(rho)
    pos = lam[lam > 0.0]
    return max(float(-np.sum(pos * np.log(pos))), 0.0)


def shannon_entropy(p: np.ndarray) -> float:
    """Shannon entropy of a probability vector, in nats."""
    p = np.asarray(p, dtype=float)
    pos = p[p > 0.0]
    return float(-np.sum(pos * np.log(pos)))


def renyi_entropy(rho: np.ndarray, p: float) -> float:
    """Renyi entropy (1/(1-p)) ln Tr rho^p for p >= 0, p != 1."""
    if p < 0.0:
        raise DomainError("Renyi order must be >= 0")
    if p == 1.0:
        raise DomainError("p = 1 is the von Neumann limit; use von_neumann_entropy")
    lam = _clamped_spectrum(rho)
    pos = lam[lam > 1e-15]
    if p == 0.0:
        return float(np.log(pos.size))
    return max(float(np.log(np.sum(pos ** p)) / (1.0 - p)), 0.0)


def scalar_F(x):
    """F(x) = -ln x + x - 1, defined for x > 0; convex with F(1) = 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("F is defined for x > 0")
    out = -np.log(x) + x - 1.0
    return float(out) if out.ndim == 0 else out


def scalar_f(x):
    """f(x) = x ln x - x + 1 for x >= 0, with f(0) := 1 by continuity."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("f is defined for x >= 0")
    safe = np.where(x > 0.0, x, 1.0)
    out = np.where(x > 0.0, x * np.log(safe) - x + 1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def fannes_bound(z: np.ndarray, q: np.ndarray) -> float:
    """eps (ln d + ln(1/eps)) with eps the l1 distance of the spectra.

    Dominates the Shannon entropy difference |H(z) - H(q)| in the regime
    eps <= 1.
    """
    z = np.asarray(z, dtype=float)
    q = np.asarray(q, dtype=float)
    if z.shape != q.shape:
        raise DomainError("spectra must have the same dimension")
    eps = float(np.sum(np.abs(z - q)))
    if eps > 1.0 + 1e-12:
        raise RegimeError(f"l1 distance {eps:.6f} > 1 is outside the bound regime")
    if eps == 0.0:
        return 0.0
    d = z.size
    return eps * (math.log(d) + math.log(1.0 / eps))


class EtaTerm(NamedTuple):
    value: float
    eps_m: float
    valid: bool


def eta_term(d: int, n: float, t: float) -> EtaTerm:
    """Entropy-perturbation budget eta = d eps_m (ln d + ln(1/eps_m)).

    Here eps_m = t d sqrt(d ln n / n) is the worst-case l1 spectral shift at
    tube radius t.  The flag is False when eps_m >= 1 (the Fannes regime is
    left, so the value is not meaningful as a bound).
    """
    if t == 0.0:
        return EtaTerm(0.0, 0.0, True)
    eps_m = t * d * math.sqrt(d * math.log(n) / n)
    if eps_m >= 1.0:
        return EtaTerm(float("nan"), eps_m, False)
    return EtaTerm(d * eps_m * (math.log(d) + math.log(1.0 / eps_m)), eps_m, True)


def operator_norm(h: np.ndarray) -> float:
    """Operator norm of a Hermitian matrix (max absolute eigenvalue)."""
    h = np.asarray(h, dtype=complex)
    lam = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return float(np.max(np.abs(lam)))


@dataclass(frozen=True)
class BallSpec:
    """Operator-norm ball of radius b sqrt(ln n / n) around I/d."""

    b: float
    n: int
    d: int

    def __post_init__(self):
        if self.b <= 0.0:
            raise DomainError("ball parameter b must be > 0")

    @property
    def radius(self) -> float:
        return self.b * math.sqrt(math.log(self.n) / self.n)


@dataclass(frozen=True)
class TubeSpec:
    """Tube of radius t sqrt(d ln n / n) around the segment toward I/d."""

    gamma: float
    t: float
    n: int
    d: int

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("gamma must lie in (0, 1)")
        if self.t < 0.0:
            raise DomainError("t must be >= 0")

    @property
    def radius(self) -> float:
        return self.t * math.sqrt(self.d * math.log(self.n) / self.n)


def ball_membership(rho: np.ndarray, spec: BallSpec) -> bool:
    """True iff the operator-norm distance of rho to I/d is within the radius."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.d, spec.d):
        raise DomainError("state dimension does not match the ball spec")
    return operator_norm(rho - np.eye(spec.d) / spec.d) <= spec.radius


def _golden_min(fun, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section minimum of a unimodal function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def tube_distance(theta: np.ndarray, rho: np.ndarray, spec: TubeSpec) -> float:
    """Distance from theta to the segment {r rho + (1-r) I/d : gamma <= r <= 1}.

    The objective is convex in r (operator norm of an affine family), so a
    golden-section search to 1e-10 locates the minimum.
    """
    theta = np.asarray(theta, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    d = spec.d
    if theta.shape != (d, d) or rho.shape != (d, d):
        raise DomainError("state dimensions do not match the tube spec")
    eye_d = np.eye(d) / d

    def objective(r: float) -> float:
        return operator_norm(theta - r * rho - (1.0 - r) * eye_d)

    _, best = _golden_min(objective, spec.gamma, 1.0, 1e-10)
    return min(best, objective(spec.gamma), objective(1.0))


def tube_membership(theta: np.ndarray, rho: np.ndarray, spec: TubeSpec) -> bool:
    return tube_distance(theta, rho, spec) <= spec.radius
