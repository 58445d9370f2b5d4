"""Random unitary channels: construction, sampling, and evaluation.

A random unitary channel acts as ``rho -> sum_i w_i U_i rho U_i^*`` with
probability weights ``w`` on the d-simplex and Haar-style unitaries ``U_i``
of size n x n.  The module also provides the complementary channel (output
to the environment), the entrywise-conjugate channel, the Stinespring block
isometry, and the product-channel evaluation on the maximally entangled
input, carried out in the d^2-dimensional environment picture so that the
output entropy never requires an n^2 x n^2 matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidStateError, ResourceError
from .rng import as_generator

# Tolerances for the structural invariants of the domain types.
UNIT_ATOL = 1e-12
HERMITIAN_ATOL = 1e-10
UNITARY_ATOL = 1e-10
SIMPLEX_ATOL = 1e-12

# Guard for product-channel evaluations (number of matrix cells).
DEFAULT_PRODUCT_CELL_CAP = 1 << 22


# ---------------------------------------------------------------------------
# Domain-type validation helpers.  States and vectors are plain complex
# ndarrays; these checks enforce the type invariants where they matter.
# ---------------------------------------------------------------------------

def check_unit_vector(z: np.ndarray, atol: float = UNIT_ATOL) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.size < 1:
        raise DimensionError("unit vector must be a nonempty 1-d array")
    if abs(np.vdot(z, z).real - 1.0) > atol:
        raise InvalidStateError("vector norm differs from 1 beyond tolerance")
    return z


def check_density_matrix(rho: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise InvalidStateError("matrix is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > atol:
        raise InvalidStateError("trace differs from 1 beyond tolerance")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -atol:
        raise InvalidStateError("negative eigenvalue beyond tolerance")
    return rho


def check_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError("unitary must be square")
    n = u.shape[0]
    if np.max(np.abs(u @ u.conj().T - np.eye(n))) > atol:
        raise InvalidStateError("U U* deviates from identity beyond tolerance")
    return u


def check_simplex_point(w: np.ndarray, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise DimensionError("simplex point must be a nonempty 1-d array")
    if w.min() < -atol:
        raise InvalidStateError("negative simplex weight")
    if abs(w.sum() - 1.0) > atol:
        raise InvalidStateError("simplex weights do not sum to 1")
    return w


def pure_state(z: np.ndarray) -> np.ndarray:
    """Rank-one projector z z* for a unit vector z."""
    z = np.asarray(z, dtype=complex)
    return np.outer(z, z.conj())


@dataclass(frozen=True)
class RandomUnitaryChannel:
    """Weights on the d-simplex plus d unitaries of size n x n.

    ``weights`` has shape (d,) and ``unitaries`` shape (d, n, n).  Instances
    are immutable and safe to share across threads.
    """

    weights: np.ndarray
    unitaries: np.ndarray

    def __post_init__(self):
        w = check_simplex_point(self.weights)
        u = np.asarray(self.unitaries, dtype=complex)
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise DimensionError("unitaries must have shape (d, n, n)")
        if u.shape[0] != w.size:
            raise DimensionError("number of unitaries must match weights dimension")
        for k in range(u.shape[0]):
            check_unitary(u[k])
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "unitaries", u)

    @property
    def d(self) -> int:
        return self.weights.size

    @property
    def n(self) -> int:
        return self.unitaries.shape[1]


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _ginibre(g: np.random.Generator, shape) -> np.ndarray:
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2.0)


def sample_haar_unitaries(n: int, count: int, rng) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape (count, n, n).

    QR of a complex Ginibre matrix alone is not Haar distributed; the
    diagonal phases of the triangular factor must be normalized away.
    """
    if n < 1:
        raise DimensionError("unitary dimension must be >= 1")
    if count < 1:
        raise DimensionError("count must be >= 1")
    g = as_generator(rng)
    z = _ginibre(g, (count, n, n))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1).copy()
    mags = np.abs(diag)
    diag[mags == 0.0] = 1.0
    mags[mags == 0.0] = 1.0
    q *= (diag / mags)[:, None, :]
    return q


def sample_haar_unitary(n: int, rng) -> np.ndarray:
    """One Haar-distributed unitary of size n x n."""
    return sample_haar_unitaries(n, 1, rng)[0]


def sample_unit_vectors(m: int, count: int, rng) -> np.ndarray:
    """``count`` vectors uniform on the unit sphere of C^m, shape (count, m)."""
    if m < 1:
        raise DimensionError("vector dimension must be >= 1")
    if count < 1:
        raise DimensionError("count must be >= 1")
    g = as_generator(rng)
    z = _ginibre(g, (count, m))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def sample_unit_vector(m: int, rng) -> np.ndarray:
    """Uniform unit vector in C^m (normalized i.i.d. complex Gaussian)."""
    return sample_unit_vectors(m, 1, rng)[0]


def sample_weights_nu(d: int, n: int, rng) -> np.ndarray:
    """Channel weights with the block-norm distribution of a uniform vector.

    Draws z uniform on the unit sphere of C^(d n) and returns
    ``Y_j = sum_i |z_ij|^2`` for the n x d reshaping of z, so the weights sum
    to one exactly (up to rounding).
    """
    if d < 1 or n < 1:
        raise DimensionError("dimensions must be >= 1")
    z = sample_unit_vector(d * n, rng)
    m = z.reshape(n, d)
    w = np.sum(np.abs(m) ** 2, axis=0)
    return w / w.sum()


def sample_weights_nu_batch(d: int, n: int, count: int, rng) -> np.ndarray:
    z = sample_unit_vectors(d * n, count, rng)
    m = z.reshape(count, n, d)
    w = np.sum(np.abs(m) ** 2, axis=1)
    return w / w.sum(axis=1, keepdims=True)


def sample_channel(d: int, n: int, rng) -> RandomUnitaryChannel:
    """Random channel: weights from the block-norm law, unitaries i.i.d. Haar.

    Weights and unitaries are drawn independently from a single generator,
    so the channel is a deterministic function of the stream.
    """
    if d < 1 or n < 1:
        raise DimensionError("dimensions must be >= 1")
    g = as_generator(rng)
    w = sample_weights_nu(d, n, g)
    u = sample_haar_unitaries(n, d, g)
    return RandomUnitaryChannel(w, u)


# ---------------------------------------------------------------------------
# Channel action
# ---------------------------------------------------------------------------

def _check_input(phi: RandomUnitaryChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (phi.n, phi.n):
        raise DimensionError(f"input must be {phi.n} x {phi.n}, got {rho.shape}")
    return rho


def apply_channel(phi: RandomUnitaryChannel, rho: np.ndarray) -> np.ndarray:
    """``sum_i w_i U_i rho U_i^*`` (trace preserving, unital)."""
    rho = _check_input(phi, rho)
    u = phi.unitaries
    urho = u @ rho
    return np.einsum("i,iab,icb->ac", phi.weights, urho, u.conj(), optimize=True)


def complementary_output(phi: RandomUnitaryChannel, rho: np.ndarray) -> np.ndarray:
    """d x d environment output with entries sqrt(w_i w_j) Tr(rho U_j^* U_i)."""
    rho = _check_input(phi, rho)
    u = phi.unitaries
    urho = u @ rho
    traces = np.einsum("iab,jab->ij", urho, u.conj(), optimize=True)
    s = np.sqrt(phi.weights)
    return traces * np.outer(s, s)


def complementary_output_pure(phi: RandomUnitaryChannel, z: np.ndarray) -> np.ndarray:
    """Fast path for rank-one inputs z z*."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (phi.n,):
        raise DimensionError(f"input vector must have length {phi.n}")
    y = phi.unitaries @ z
    gram = y @ y.conj().T
    s = np.sqrt(phi.weights)
    return gram * np.outer(s, s)


def conjugate_channel_output(phi: RandomUnitaryChannel, rho: np.ndarray) -> np.ndarray:
    """Output of the entrywise-conjugate channel: sum_i w_i conj(U_i) rho U_i^T."""
    rho = _check_input(phi, rho)
    uc = phi.unitaries.conj()
    ucrho = uc @ rho
    return np.einsum("i,iab,icb->ac", phi.weights, ucrho, phi.unitaries, optimize=True)


def stinespring_isometry(phi: RandomUnitaryChannel) -> np.ndarray:
    """The (n d) x n block isometry W with blocks sqrt(w_i) U_i.

    W^* W = I_n, the partial trace of W rho W^* over the environment equals
    ``apply_channel`` and the partial trace over the system equals
    ``complementary_output``.
    """
    s = np.sqrt(phi.weights)
    blocks = s[:, None, None] * phi.unitaries
    return blocks.reshape(phi.d * phi.n, phi.n)


def partial_trace_env(t: np.ndarray, d: int, n: int) -> np.ndarray:
    """Trace out the d-dimensional (block) factor of an (nd) x (nd) matrix."""
    r = t.reshape(d, n, d, n)
    return np.einsum("iaib->ab", r)


def partial_trace_sys(t: np.ndarray, d: int, n: int) -> np.ndarray:
    """Trace out the n-dimensional factor of an (nd) x (nd) matrix."""
    r = t.reshape(d, n, d, n)
    return np.einsum("iaja->ij", r)


def maximally_entangled_state(n: int) -> np.ndarray:
    """(1/sqrt(n)) sum_k e_k (x) e_k as a vector in C^(n^2)."""
    if n < 1:
        raise DimensionError("dimension must be >= 1")
    return np.eye(n, dtype=complex).reshape(n * n) / np.sqrt(n)


def product_channel_output(phi: RandomUnitaryChannel, rho2: np.ndarray,
                           cell_cap: int = DEFAULT_PRODUCT_CELL_CAP) -> np.ndarray:
    """Output of (Phi (x) conj-Phi) on an n^2 x n^2 input, computed directly.

    Feasible only for small n; use :func:`product_entangled_gram` for the
    entropy of the maximally entangled input at larger sizes.
    """
    n, d = phi.n, phi.d
    rho2 = np.asarray(rho2, dtype=complex)
    if rho2.shape != (n * n, n * n):
        raise DimensionError(f"input must be {n * n} x {n * n}")
    if n ** 4 > cell_cap or (n * n) * (d * d) > cell_cap:
        raise ResourceError(
            f"product-channel evaluation needs {max(n ** 4, n * n * d * d)} cells, "
            f"cap is {cell_cap}")
    out = np.zeros_like(rho2)
    for i in range(d):
        for j in range(d):
            k = np.kron(phi.unitaries[i], phi.unitaries[j].conj())
            out += phi.weights[i] * phi.weights[j] * (k @ rho2 @ k.conj().T)
    return out


def product_entangled_gram(phi: RandomUnitaryChannel,
                           dim_cap: int = DEFAULT_PRODUCT_CELL_CAP) -> np.ndarray:
    """d^2 x d^2 matrix sharing its nonzero spectrum with the product output.

    The product-channel output on the maximally entangled input is the
    mixture of the d^2 pure states (U_i (x) conj(U_j)) psi-hat with weights
    w_i w_j; its nonzero spectrum equals that of the weighted Gram matrix
    G[(ij),(kl)] = sqrt(w_i w_j w_k w_l) Tr(U_i^* U_k U_l^* U_j) / n.
    """
    d, n = phi.d, phi.n
    if d * d * d * d > dim_cap:
        raise ResourceError(f"environment Gram matrix needs {d ** 4} cells, cap is {dim_cap}")
    u = phi.unitaries
    # a[i, k] = U_i^* U_k (matrix product, not entrywise)
    a = np.einsum("iab,kac->ikbc", u.conj(), u, optimize=True)
    t = np.einsum("ikbc,ljcb->iklj", a, a, optimize=True)
    g4 = np.transpose(t, (0, 3, 1, 2))  # index order (i, j, k, l)
    s = np.sqrt(phi.weights)
    g4 = g4 * s[:, None, None, None] * s[None, :, None, None]
    g4 = g4 * s[None, None, :, None] * s[None, None, None, :]
    gram = g4.reshape(d * d, d * d) / n
    return 0.5 * (gram + gram.conj().T)
