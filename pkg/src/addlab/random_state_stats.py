"""Statistics of induced random states and their eigenvalue distribution.

The central object is the map G(z) = M(z)^* M(z), where a unit vector z in
C^(nd) is reshaped row-major into the n x d matrix M.  For uniform z the
eigenvalues of G(z) carry the classical joint density

    Z(n,d)^{-1} prod_{i<j} (w_i - w_j)^2 prod_i w_i^{n-d}

on the simplex, with Z known exactly as a product of Gamma functions.  The
module evaluates that density in log space, samples it by Monte Carlo (both
through G(z) and through channel outputs, whose agreement is a testable
statement), and provides the overlap / cross-term tail laws plus the
typicality and tube-hit estimators used by the bound pipeline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channel_core import (
    RandomUnitaryChannel,
    sample_haar_unitaries,
    sample_unit_vectors,
)
from .entropy_geometry import BallSpec, TubeSpec, operator_norm, tube_distance
from .errors import DimensionError, DomainError
from .rng import RngStream, fraction_with_stderr, run_chunked


# ---------------------------------------------------------------------------
# The induced state G(z) and its eigenvalue density
# ---------------------------------------------------------------------------

def gram_state(z: np.ndarray, d: int) -> np.ndarray:
    """d x d state M(z)^* M(z) for a unit vector z of length n*d."""
    z = np.asarray(z, dtype=complex)
    if d < 1 or z.ndim != 1 or z.size % d != 0 or z.size < d:
        raise DimensionError(f"vector length {z.size} is not n*{d} with n >= 1")
    n = z.size // d
    m = z.reshape(n, d)
    return m.conj().T @ m


def exact_log_Z(n: int, d: int) -> float:
    """ln Z(n,d) for the eigenvalue density normalization.

    Z(n,d) = Gamma(dn)^{-1} prod_{k=1..d} Gamma(n-d+k) Gamma(k+1), evaluated
    with log-Gamma since Z underflows catastrophically already at modest n.
    """
    if d < 1 or n < d:
        raise DomainError("requires n >= d >= 1")
    out = -math.lgamma(d * n)
    for k in range(1, d + 1):
        out += math.lgamma(n - d + k) + math.lgamma(k + 1)
    return out


class ZInverseBound(NamedTuple):
    value: float
    side_condition_ok: bool


def z_inverse_bound(n: int, d: int) -> ZInverseBound:
    """Upper bound d^2 ln n + d(n-d) ln d for -ln Z(n,d).

    The derivation needs (ln n - ln d) >= 4; the flag surfaces that side
    condition instead of silently assuming it.
    """
    if d < 1 or n < d:
        raise DomainError("requires n >= d >= 1")
    value = d * d * math.log(n) + d * (n - d) * math.log(d)
    return ZInverseBound(value, math.log(n) - math.log(d) >= 4.0)


@dataclass(frozen=True)
class DensityEvaluation:
    log_density: float
    log_Z: float
    in_support: bool


def mu_log_density(w: Sequence[float], n: int) -> DensityEvaluation:
    """Log of the eigenvalue density at a simplex point, with exact log Z.

    The density is symmetric under coordinate permutations and should only be
    integrated over permutation-invariant events.  Points with a repeated
    coordinate have density zero (the squared Vandermonde vanishes) and
    points with a negative coordinate are out of support.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    if n < d:
        raise DomainError("requires n >= d")
    log_z = exact_log_Z(n, d)
    if w.min() < 0.0:
        return DensityEvaluation(float("-inf"), log_z, False)
    diffs = w[:, None] - w[None, :]
    iu = np.triu_indices(d, k=1)
    gaps = np.abs(diffs[iu])
    if np.any(gaps == 0.0) or (n > d and np.any(w == 0.0)):
        return DensityEvaluation(float("-inf"), log_z, True)
    log_density = 2.0 * float(np.sum(np.log(gaps))) - log_z
    if n > d:
        log_density += (n - d) * float(np.sum(np.log(w)))
    return DensityEvaluation(log_density, log_z, True)


def sample_spectrum_mc(d: int, n: int, count: int, rng: RngStream,
                       threads: int = 1, chunk_size: int = 5_000) -> np.ndarray:
    """Sorted (descending) eigenvalues of G(z) for uniform z, shape (count, d)."""
    if count < 1:
        raise DomainError("count must be >= 1")

    def worker(g, m):
        z = (g.standard_normal((m, n * d)) + 1j * g.standard_normal((m, n * d)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        mats = z.reshape(m, n, d)
        gram = np.einsum("mij,mik->mjk", mats.conj(), mats, optimize=True)
        lam = np.linalg.eigvalsh(gram)
        return np.sort(lam, axis=1)[:, ::-1]

    parts = run_chunked(count, rng, worker, threads=threads, chunk_size=chunk_size)
    return np.concatenate(parts, axis=0)


def channel_output_spectra(d: int, n: int, count: int, rng: RngStream,
                           threads: int = 1, chunk_size: int = 2_000) -> np.ndarray:
    """Sorted spectra of Phi^C(z z*) with Phi and z drawn independently.

    Phi carries block-norm weights and i.i.d. Haar unitaries; z is uniform on
    the input sphere.  Per the statistical-equivalence statement these
    spectra match those of :func:`sample_spectrum_mc` in distribution.
    """
    if count < 1:
        raise DomainError("count must be >= 1")

    def worker(g, m):
        zw = (g.standard_normal((m, n * d)) + 1j * g.standard_normal((m, n * d)))
        weights = np.abs(zw.reshape(m, n, d)) ** 2
        weights = weights.sum(axis=1)
        weights /= weights.sum(axis=1, keepdims=True)
        us = sample_haar_unitaries(n, m * d, g).reshape(m, d, n, n)
        z = (g.standard_normal((m, n)) + 1j * g.standard_normal((m, n)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        y = np.einsum("sdab,sb->sda", us, z, optimize=True)
        gram = np.einsum("sia,sja->sij", y, y.conj(), optimize=True)
        s = np.sqrt(weights)
        gram = gram * s[:, :, None] * s[:, None, :]
        lam = np.linalg.eigvalsh(gram)
        return np.sort(lam, axis=1)[:, ::-1]

    parts = run_chunked(count, rng, worker, threads=threads, chunk_size=chunk_size)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov machinery with calibrated thresholds
# ---------------------------------------------------------------------------

def two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Classical two-sample KS statistic for scalar samples."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def one_sample_ks(samples: np.ndarray, cdf) -> float:
    """One-sample KS distance against a callable CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    f = np.asarray(cdf(x), dtype=float)
    upper = np.max(np.arange(1, m + 1) / m - f)
    lower = np.max(f - np.arange(0, m) / m)
    return float(max(upper, lower))


def max_component_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Max over columns of the two-sample KS statistic (sorted-spectra compare)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    return max(two_sample_ks(a[:, j], b[:, j]) for j in range(a.shape[1]))


def ks_permutation_threshold(a: np.ndarray, b: np.ndarray, alpha: float,
                             rng: RngStream, reps: int = 400) -> float:
    """(1-alpha) quantile of the max-component KS statistic under label permutation.

    Calibrates the null distribution at the exact sample sizes used, rather
    than relying on asymptotics.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    pooled = np.concatenate([a, b], axis=0)
    n1 = a.shape[0]
    g = rng.generator()
    stats = np.empty(reps)
    for r in range(reps):
        perm = g.permutation(pooled.shape[0])
        stats[r] = max_component_ks(pooled[perm[:n1]], pooled[perm[n1:]])
    return float(np.quantile(stats, 1.0 - alpha))


@dataclass(frozen=True)
class EquivalenceTestResult:
    ks_stat: float
    threshold: float
    passed: bool
    count_per_side: int
    alpha: float


def lemma34_equivalence_test(d: int, n: int, count: int, rng: RngStream,
                             threads: int = 1, alpha: float = 0.01,
                             calibration_reps: int = 400) -> EquivalenceTestResult:
    """Two-sample comparison of the channel-output and G(z) spectra pipelines.

    The two samplers are asserted equal in distribution; the KS statistic is
    compared against the permutation-calibrated (1-alpha) null quantile.
    """
    spectra_channel = channel_output_spectra(d, n, count, rng.stream(0), threads=threads)
    spectra_gram = sample_spectrum_mc(d, n, count, rng.stream(1_000_000), threads=threads)
    stat = max_component_ks(spectra_channel, spectra_gram)
    threshold = ks_permutation_threshold(
        spectra_channel, spectra_gram, alpha, rng.stream(2_000_000), reps=calibration_reps)
    return EquivalenceTestResult(stat, threshold, stat < threshold, count, alpha)


# ---------------------------------------------------------------------------
# Concentration bound and analytic laws
# ---------------------------------------------------------------------------

class TailBound(NamedTuple):
    value: float
    vacuous: bool


def concentration_tail_bound(d: int, n: int, t: float) -> TailBound:
    """Closed-form bound on P(|w_i - 1/d| >= t) for a fixed coordinate.

    exp[d^2 ln n - ln (d-1)! - ((n-d)/2) d^2 t^2 + ((n-d)/6) d^3 t^3],
    computed in log space; values above 1 are flagged as vacuous.
    """
    if n < d or t < 0.0:
        raise DomainError("requires n >= d and t >= 0")
    log_val = (d * d * math.log(n) - math.lgamma(d)
               - 0.5 * (n - d) * d * d * t * t
               + (n - d) / 6.0 * d ** 3 * t ** 3)
    value = math.exp(min(log_val, 700.0))
    return TailBound(value, value > 1.0)


def empirical_coordinate_tail(spectra: np.ndarray, t: float) -> float:
    """Monte Carlo estimate of P(|w_i - 1/d| >= t) for a fixed coordinate.

    By exchangeability this equals the mean count of deviating coordinates
    divided by d, which is how sorted spectra are scored.
    """
    spectra = np.atleast_2d(spectra)
    d = spectra.shape[1]
    deviating = np.abs(spectra - 1.0 / d) >= t
    return float(np.mean(np.sum(deviating, axis=1)) / d)


def top_eigenvalue_cdf_d2(n: int, grid_points: int = 4001):
    """CDF of the top eigenvalue at d = 2, from the analytic density.

    The unordered coordinate w has density exp(mu_log_density((w, 1-w), n));
    the top eigenvalue max(w, 1-w) has twice that density on [1/2, 1].
    Returns a callable CDF built on a dense quadrature grid.
    """
    xs = np.linspace(0.5, 1.0, grid_points)
    inner = xs[1:-1]
    dens = np.empty_like(xs)
    log_vals = np.array([mu_log_density((x, 1.0 - x), n).log_density for x in inner])
    dens[1:-1] = 2.0 * np.exp(log_vals)
    # Endpoint densities: the Vandermonde factor vanishes at w = 1/2; at
    # w = 1 the density vanishes for n > 2 and equals 2 exp(-ln Z) at n = 2.
    dens[0] = 0.0
    dens[-1] = 2.0 * math.exp(-exact_log_Z(n, 2)) if n == 2 else 0.0
    cdf_grid = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
    total = cdf_grid[-1]
    cdf_grid /= total

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), xs, cdf_grid, left=0.0, right=1.0)

    return cdf


# ---------------------------------------------------------------------------
# Overlap decomposition and tail laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapDecomposition:
    """theta = x psi + sqrt(1 - |x|^2) phi with phi a unit vector orthogonal to psi."""

    x: complex
    phi: np.ndarray


def overlap_decompose(theta: np.ndarray, psi: np.ndarray) -> OverlapDecomposition:
    theta = np.asarray(theta, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if theta.shape != psi.shape or theta.ndim != 1:
        raise DimensionError("theta and psi must be unit vectors of the same length")
    x = complex(np.vdot(psi, theta))
    resid = theta - x * psi
    norm = np.linalg.norm(resid)
    if norm < 1e-12:
        # Collinear case: any unit vector orthogonal to psi will do.
        k = int(np.argmin(np.abs(psi)))
        cand = np.zeros_like(psi)
        cand[k] = 1.0
        cand -= np.vdot(psi, cand) * psi
        phi = cand / np.linalg.norm(cand)
    else:
        phi = resid / norm
    return OverlapDecomposition(x, phi)


def overlap_tail(n: int, t: float) -> float:
    """P(|<psi, theta>| > t) = (1 - t^2)^(n-1) for uniform theta."""
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    return (1.0 - t * t) ** (n - 1)


def overlap_samples(n: int, count: int, rng: RngStream, threads: int = 1,
                    chunk_size: int = 20_000):
    """|x| and |phi_2|^2 samples against the fixed reference psi = e_1.

    The second statistic is a fixed coordinate functional of phi used for
    empirical independence checks.
    """
    def worker(g, m):
        z = (g.standard_normal((m, n)) + 1j * g.standard_normal((m, n)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        x = z[:, 0]
        resid_sq = 1.0 - np.abs(x) ** 2
        comp = np.abs(z[:, 1]) ** 2 / np.maximum(resid_sq, 1e-300)
        return np.abs(x), comp

    parts = run_chunked(count, rng, worker, threads=threads, chunk_size=chunk_size)
    abs_x = np.concatenate([p[0] for p in parts])
    phi_stat = np.concatenate([p[1] for p in parts])
    return abs_x, phi_stat


@dataclass(frozen=True)
class CrossTermTail:
    ts: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray
    within_bound: np.ndarray


def cross_term_frobenius(phi: RandomUnitaryChannel, psi: np.ndarray,
                         thetas: np.ndarray) -> np.ndarray:
    """Frobenius norms of Phi^C(|theta><psi|) for a batch of thetas."""
    u = phi.unitaries
    s = np.sqrt(phi.weights)
    p = u @ psi                                     # (d, n)
    y = np.einsum("iab,sb->sia", u, thetas, optimize=True)
    mats = np.einsum("sia,ja->sij", y, p.conj(), optimize=True)
    mats = mats * s[None, :, None] * s[None, None, :]
    return np.sqrt(np.sum(np.abs(mats) ** 2, axis=(1, 2)))


def cross_term_tail_check(phi: RandomUnitaryChannel, psi: np.ndarray, count: int,
                          rng: RngStream, ts: Sequence[float] | None = None,
                          threads: int = 1) -> CrossTermTail:
    """Empirical tail of ||Phi^C(|theta><psi|)||_F against d^2 (1-t^2)^(n-1).

    The comparison is made at grid points where the analytic bound is below
    one, with a three-standard-error allowance on the Monte Carlo side.
    """
    d, n = phi.d, phi.n
    if ts is None:
        ts = np.linspace(0.05, 1.0, 20)
    ts = np.asarray(ts, dtype=float)

    def worker(g, m):
        z = (g.standard_normal((m, n)) + 1j * g.standard_normal((m, n)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        norms = cross_term_frobenius(phi, psi, z)
        return np.array([(norms > t).sum() for t in ts])

    parts = run_chunked(count, rng, worker, threads=threads, chunk_size=10_000)
    hits = np.sum(parts, axis=0)
    empirical = hits / count
    bound = np.minimum(d * d * (1.0 - ts ** 2) ** (n - 1), 1.0)
    stderr = np.sqrt(np.maximum(bound * (1.0 - bound), 1.0 / count) / count)
    within = (bound >= 1.0) | (empirical <= bound + 3.0 * stderr)
    return CrossTermTail(ts, empirical, stderr, bound, within)


# ---------------------------------------------------------------------------
# Typicality and tube-hit estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypicalityEstimate:
    fraction: float
    stderr: float
    is_typical: bool
    borderline: bool
    count: int


def _env_outputs_batch(phi: RandomUnitaryChannel, thetas: np.ndarray) -> np.ndarray:
    y = np.einsum("iab,sb->sia", phi.unitaries, thetas, optimize=True)
    gram = np.einsum("sia,sja->sij", y, y.conj(), optimize=True)
    s = np.sqrt(phi.weights)
    return gram * s[None, :, None] * s[None, None, :]


def typicality_estimate(phi: RandomUnitaryChannel, ball: BallSpec, count: int,
                        rng: RngStream, threads: int = 1) -> TypicalityEstimate:
    """Fraction of uniform inputs mapped by Phi^C into the ball around I/d.

    ``is_typical`` is the point-estimate comparison against 1/2; the
    ``borderline`` flag is raised when the estimate sits within three
    standard errors of 1/2.
    """
    if ball.d != phi.d or ball.n != phi.n:
        raise DimensionError("ball spec dimensions do not match the channel")
    d, n = phi.d, phi.n
    eye_d = np.eye(d) / d

    def worker(g, m):
        z = (g.standard_normal((m, n)) + 1j * g.standard_normal((m, n)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        outs = _env_outputs_batch(phi, z)
        lam = np.linalg.eigvalsh(outs - eye_d[None, :, :])
        dist = np.max(np.abs(lam), axis=1)
        return int(np.sum(dist <= ball.radius))

    hits = sum(run_chunked(count, rng, worker, threads=threads, chunk_size=10_000))
    fraction, stderr = fraction_with_stderr(hits, count)
    return TypicalityEstimate(fraction, stderr, fraction >= 0.5,
                              abs(fraction - 0.5) < 3.0 * stderr, count)


def beta_floor(d: int, n: float) -> float:
    """beta = 1/2 - (d^2 + 2) (1 - d ln d / n)^(n-1), the tube-hit constant."""
    a = d * math.log(d) / n
    if a < 1.0:
        decay = math.exp((n - 1) * math.log1p(-a))
    elif float(n).is_integer():
        decay = (1.0 - a) ** (int(n) - 1)
    else:
        raise DomainError("requires n > d ln d for non-integer n")
    return 0.5 - (d * d + 2) * decay


@dataclass(frozen=True)
class TubeHitEstimate:
    fraction: float
    stderr: float
    beta: float
    analytic_floor: float
    floor_valid: bool
    floor_respected: bool
    typicality: TypicalityEstimate
    count: int


def tube_hit_estimate(phi: RandomUnitaryChannel, psi: np.ndarray, tube: TubeSpec,
                      ball: BallSpec, count: int, rng: RngStream,
                      threads: int = 1) -> TubeHitEstimate:
    """Fraction of uniform inputs whose output lands in the tube at Phi^C(psi psi*).

    The analytic floor beta (1-gamma)^(n-1) is only asserted when beta > 0,
    the typicality estimate reports typical, and t >= b + 4; otherwise the
    fraction is recorded without an assertion and ``floor_respected`` stays
    True vacuously.
    """
    if tube.d != phi.d or tube.n != phi.n:
        raise DimensionError("tube spec dimensions do not match the channel")
    d, n = phi.d, phi.n
    rho = _env_outputs_batch(phi, np.asarray(psi, dtype=complex)[None, :])[0]

    def worker(g, m):
        z = (g.standard_normal((m, n)) + 1j * g.standard_normal((m, n)))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        outs = _env_outputs_batch(phi, z)
        hits = 0
        for k in range(m):
            if tube_distance(outs[k], rho, tube) <= tube.radius:
                hits += 1
        return hits

    hits = sum(run_chunked(count, rng, worker, threads=threads, chunk_size=2_000))
    fraction, stderr = fraction_with_stderr(hits, count)
    beta = beta_floor(d, n)
    floor = beta * (1.0 - tube.gamma) ** (n - 1)
    typ = typicality_estimate(phi, ball, count, rng.stream(500_000), threads=threads)
    floor_valid = beta > 0.0 and typ.is_typical and tube.t >= ball.b + 4.0
    floor_respected = (not floor_valid) or fraction >= floor - 3.0 * stderr
    return TubeHitEstimate(fraction, stderr, beta, floor, floor_valid,
                           floor_respected, typ, count)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def export_spectra_csv(path, spectra: np.ndarray) -> None:
    """One row per sample, sorted eigenvalues."""
    spectra = np.atleast_2d(spectra)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"lambda_{k + 1}" for k in range(spectra.shape[1])])
        for row in spectra:
            writer.writerow([repr(float(v)) for v in row])


def export_histogram_csv(path, values: np.ndarray, bins: int = 50) -> None:
    """Histogram rows (bin_left, bin_right, count, density)."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    total = counts.sum()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count", "density"])
        for k in range(counts.size):
            width = edges[k + 1] - edges[k]
            density = counts[k] / (total * width) if total > 0 and width > 0 else 0.0
            writer.writerow([repr(float(edges[k])), repr(float(edges[k + 1])),
                             int(counts[k]), repr(float(density))])
