"""Minimum-output-entropy estimation and the product-channel upper bounds.

The objective S(Phi^C(z z*)) is optimized over unit vectors z by multi-start
projected gradient descent on the complex unit sphere.  The complementary
d x d output is used throughout because it shares its nonzero spectrum with
the n x n output on pure inputs and gives a much smaller eigenproblem.

The optimizer returns an upper bound on the minimum output entropy; it makes
no global-optimality claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel_core import (
    RandomUnitaryChannel,
    product_entangled_gram,
)
from .entropy_geometry import von_neumann_entropy
from .errors import DimensionError
from .rng import RngStream, as_generator

ARMIJO_C = 1e-4
MIN_STEP = 1e-18
DEFAULT_RESTARTS = 32
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 2000
GRAD_SINGULAR_EIG = 1e-12


@dataclass(frozen=True)
class MoeResult:
    """Best local minimum found over all restarts (an upper bound on S_min)."""

    entropy_upper_bound: float
    argmin: np.ndarray
    restarts_used: int
    converged: bool
    gradient_norm_at_exit: float


@dataclass(frozen=True)
class GapReport:
    """Additivity-gap diagnostics for one channel.

    ``gap_lower_bound`` = 2 * (S_min upper-bound estimate) - S(product on the
    entangled input).  Because the first term is an upper bound on S_min and
    not a lower bound, a positive value is a search heuristic, not a
    certified violation.
    """

    smin_phi_est: float
    product_entangled_entropy: float
    lemma1_bound: float
    gap_lower_bound: float
    certified: bool = False


def _env_output_pure(phi: RandomUnitaryChannel, z: np.ndarray) -> np.ndarray:
    y = phi.unitaries @ z
    s = np.sqrt(phi.weights)
    return (y @ y.conj().T) * np.outer(s, s)


def output_entropy(phi: RandomUnitaryChannel, z: np.ndarray) -> float:
    """S(Phi(z z*)) computed on the d x d complementary side."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (phi.n,):
        raise DimensionError(f"input vector must have length {phi.n}")
    return von_neumann_entropy(_env_output_pure(phi, z))


def _entropy_and_euclidean_grad(phi: RandomUnitaryChannel, z: np.ndarray):
    """Value, Euclidean gradient, and a near-singular-spectrum flag.

    With rho = Phi^C(z z*) and C = -(ln rho + I), the gradient of the
    unconstrained extension z -> S(rho(z)) is g = 2 A z where
    A = sum_ij sqrt(w_i w_j) C_ji U_j^* U_i.  The logarithm is clamped so the
    gradient stays finite on nearly singular spectra; the flag reports when
    the smallest eigenvalue is below 1e-12.
    """
    u = phi.unitaries
    s = np.sqrt(phi.weights)
    y = u @ z
    rho = (y @ y.conj().T) * np.outer(s, s)
    lam, vec = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    lam_clip = np.clip(lam, 0.0, None)
    flagged = bool(lam_clip.min() < GRAD_SINGULAR_EIG)
    pos = lam_clip > 0.0
    entropy = float(-np.sum(lam_clip[pos] * np.log(lam_clip[pos])))
    log_lam = np.log(np.maximum(lam_clip, 1e-300))
    c = -(vec * (log_lam + 1.0)) @ vec.conj().T
    # (A z)_a = sum_j s_j U_j^*(row sums),   row j = sum_i C_ji s_i y_i
    rows = (c * s[None, :]) @ y
    grad = 2.0 * np.einsum("jba,jb->a", u.conj(), s[:, None] * rows, optimize=True)
    return entropy, grad, flagged


def entropy_gradient(phi: RandomUnitaryChannel, z: np.ndarray):
    """Euclidean gradient of z -> S(Phi^C(z z*)); also returns the flag."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (phi.n,):
        raise DimensionError(f"input vector must have length {phi.n}")
    _, grad, flagged = _entropy_and_euclidean_grad(phi, z)
    return grad, flagged


def _project_tangent(z: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g - np.vdot(z, g).real * z


def _descend(phi: RandomUnitaryChannel, z0: np.ndarray, tol: float, max_iter: int):
    z = z0 / np.linalg.norm(z0)
    value, grad, _ = _entropy_and_euclidean_grad(phi, z)
    converged = False
    grad_norm = float("nan")
    step = 1.0
    stalled = 0
    for _ in range(max_iter):
        tangent = _project_tangent(z, grad)
        grad_norm = float(np.linalg.norm(tangent))
        if grad_norm < tol * max(1.0, abs(value)):
            converged = True
            break
        if value < 1e-12:
            # The output is pure to floating precision; the minimum cannot
            # be improved meaningfully (entropy is bounded below by 0).
            break
        # Warm-start the line search from the last accepted step; near a
        # singular minimum the gradient blows up and a cold start would
        # backtrack across many decades every iteration.
        step = min(1.0, step * 4.0)
        improved = False
        while step > MIN_STEP:
            trial = z - step * tangent
            trial /= np.linalg.norm(trial)
            trial_value = output_entropy(phi, trial)
            if trial_value <= value - ARMIJO_C * step * grad_norm ** 2:
                improved = True
                break
            step *= 0.5
        if not improved:
            # No decrease along the projected gradient at machine scale.
            break
        decrease = value - trial_value
        z = trial
        value, grad, _ = _entropy_and_euclidean_grad(phi, z)
        if decrease < 1e-15 * max(1.0, abs(value)):
            stalled += 1
            if stalled >= 10:
                break
        else:
            stalled = 0
    return value, z, converged, grad_norm


def minimize_output_entropy(phi: RandomUnitaryChannel, restarts: int = DEFAULT_RESTARTS,
                            tol: float = DEFAULT_TOL, rng: RngStream | None = None,
                            max_iter: int = DEFAULT_MAX_ITER) -> MoeResult:
    """Multi-start projected gradient descent over the input sphere.

    Restart k initializes from a uniform unit vector drawn from sub-stream k,
    so the sequence of restarts is a fixed function of the stream and the
    result is monotone improving in the number of restarts.  Ties pick the
    lowest stream id.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if rng is None:
        rng = RngStream(0)
    best = None
    for k in range(restarts):
        g = rng.stream(k).generator()
        z0 = (g.standard_normal(phi.n) + 1j * g.standard_normal(phi.n))
        z0 /= np.linalg.norm(z0)
        value, z, converged, grad_norm = _descend(phi, z0, tol, max_iter)
        if best is None or value < best[0]:
            best = (value, z, converged, grad_norm)
    value, z, converged, grad_norm = best
    # Re-evaluate from the argmin so the reported value matches it exactly.
    value = output_entropy(phi, z)
    return MoeResult(value, z, restarts, converged, grad_norm)


def lemma1_bound(d: int) -> float:
    """Universal product bound 2 ln d - (ln d)/d for the entangled input."""
    if d < 1:
        raise DimensionError("environment dimension must be >= 1")
    return 2.0 * math.log(d) - math.log(d) / d


def hp_bound(weights: np.ndarray) -> float:
    """Weight-dependent product bound h(p) with p = sum w_i^2.

    h(p) = -p ln p - (1-p) ln((1-p)/(d^2-d)), decreasing in p on [1/d, 1],
    so it never exceeds ``lemma1_bound`` and matches it at uniform weights.
    Degenerate at d = 1 (returns 0).
    """
    w = np.asarray(weights, dtype=float)
    d = w.size
    if d == 1:
        return 0.0
    p = float(np.sum(w ** 2))
    out = -p * math.log(p) if p > 0.0 else 0.0
    if p < 1.0:
        out -= (1.0 - p) * math.log((1.0 - p) / (d * d - d))
    return out


def product_entangled_entropy(phi: RandomUnitaryChannel, dim_cap: int = 1 << 22) -> float:
    """Exact entropy of (Phi (x) conj-Phi) on the maximally entangled input.

    Evaluated through the d^2-dimensional environment Gram matrix, never the
    n^2 x n^2 output.
    """
    return von_neumann_entropy(product_entangled_gram(phi, dim_cap))


def additivity_gap_report(phi: RandomUnitaryChannel, restarts: int = DEFAULT_RESTARTS,
                          rng: RngStream | None = None) -> GapReport:
    # Product entropy first: it carries the resource guard and fails fast.
    product = product_entangled_entropy(phi)
    moe = minimize_output_entropy(phi, restarts=restarts, rng=rng)
    return GapReport(
        smin_phi_est=moe.entropy_upper_bound,
        product_entangled_entropy=product,
        lemma1_bound=lemma1_bound(phi.d),
        gap_lower_bound=2.0 * moe.entropy_upper_bound - product,
    )
