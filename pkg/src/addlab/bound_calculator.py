"""Closed-form bound machinery for the additivity-violation certificate.

Everything here is deterministic scalar analysis:

- ``m_d``: the constrained minimum M_d(x) = inf { sum F(q_i d) :
  sum f(q_i d) >= x } over the simplex, reduced to a one-dimensional root
  find.  The minimizer splits the coordinates into d-1 equal small values
  and one large value z, so M_d(x) = -ln z - (d-1) ln((d-z)/(d-1)) where z
  solves z ln z + (d-z) ln((d-z)/(d-1)) = x; the constraint is monotone
  increasing in z, so bisection applies.
- ``h_min_curve`` and its minimizer: h_min(gamma) = (2 e^2 - gamma) /
  ((1-gamma) f(1-gamma)), the threshold above which the certificate decays.
- ``counterexample_condition`` and ``dmin_search``: the smallest environment
  dimension at which M_d((f(1-gamma)/2) ln d) + ln(1-gamma) > 0, minimized
  over gamma.
- ``certificate_evaluate``: the master two-term probability bound, computed
  entirely in log space with every regime precondition surfaced as a named
  flag.
- ``delta_s_max_bound``: the maximal-violation estimate 1/d at
  d = floor(exp(2h + 1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy_geometry import eta_term, scalar_F, scalar_f
from .errors import AddlabError, DomainError

TWO_E_SQ = 2.0 * math.e ** 2
BISECT_TOL = 1e-12


# ---------------------------------------------------------------------------
# M_d(x)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MdSolution:
    x: float
    d: int
    z_star: float
    value: float

    @property
    def constraint_residual(self) -> float:
        return abs(_md_constraint(self.z_star, self.d) - self.x)


def _md_constraint(z: float, d: int) -> float:
    # z ln z + (d - z) ln((d - z)/(d - 1)), monotone increasing on [1, d)
    return z * math.log(z) + (d - z) * math.log1p(-(z - 1.0) / (d - 1.0))


def _md_objective(z: float, d: int) -> float:
    return -math.log(z) - (d - 1.0) * math.log1p(-(z - 1.0) / (d - 1.0))


def m_d(x: float, d: int) -> MdSolution:
    """Constrained minimum M_d(x) via bisection on the reduced problem.

    Domain: 0 <= x <= d ln d and d >= 2.  M_d(0) = 0 with z = 1.  The
    constraint saturates its supremum d ln d only as z -> d, so for x within
    roundoff of the right endpoint the root is clamped just inside.
    """
    if d < 2:
        raise DomainError("requires d >= 2")
    if x < -1e-12:
        raise DomainError("requires x >= 0")
    if x > d * math.log(d) + 1e-9:
        raise DomainError(f"x = {x} exceeds d ln d = {d * math.log(d)}")
    if x <= 0.0:
        return MdSolution(x, d, 1.0, 0.0)
    lo, hi = 1.0, d * (1.0 - 1e-13)
    if _md_constraint(hi, d) <= x:
        return MdSolution(x, d, hi, _md_objective(hi, d))
    # Bounded bisection: stop at the tolerance or when the midpoint can no
    # longer split the interval (ulp-limited for z comparable to d).
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _md_constraint(mid, d) < x:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_TOL:
            break
    z = 0.5 * (lo + hi)
    return MdSolution(x, d, z, _md_objective(z, d))


def m_d_oracle(x: float, d: int, grid_step: float) -> float:
    """Brute-force minimum of sum F(q_i d) over a simplex grid (test oracle).

    Only feasible for d in {2, 3}; kept independent of :func:`m_d` so the
    two can cross-check each other.
    """
    if d == 2:
        q1 = np.arange(grid_step, 1.0, grid_step)
        q = np.stack([q1, 1.0 - q1], axis=1)
    elif d == 3:
        pts = []
        steps = int(round(1.0 / grid_step))
        for i in range(1, steps):
            for j in range(1, steps - i):
                pts.append((i * grid_step, j * grid_step,
                            1.0 - i * grid_step - j * grid_step))
        q = np.array(pts)
        q = q[q[:, 2] > 0.0]
    else:
        raise DomainError("oracle implemented for d in {2, 3} only")
    scaled = q * d
    feasible = scalar_f(scaled).sum(axis=1) >= x
    if not np.any(feasible):
        raise DomainError("no feasible grid point; refine the grid or lower x")
    objective = scalar_F(scaled[feasible]).sum(axis=1)
    return float(objective.min())


# ---------------------------------------------------------------------------
# f-ratio supremum and the h_min curve
# ---------------------------------------------------------------------------

def f_ratio_sup(gamma: float, x_grid: np.ndarray | None = None,
                r_points: int = 201) -> float:
    """Grid supremum of f(x) / f(r x + 1 - r) over x >= 0, gamma <= r <= 1.

    Equals 1/f(1-gamma), attained at x = 0 and r = gamma, so the returned
    grid maximum matches that closed form whenever the grid contains x = 0
    (the r-grid always includes gamma).  Points where both numerator and
    denominator vanish (x = 1) are skipped.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if x_grid is None:
        x_grid = np.linspace(0.0, 10.0, 2001)
    x_grid = np.asarray(x_grid, dtype=float)
    rs = np.linspace(gamma, 1.0, r_points)
    num = scalar_f(x_grid)
    best = 0.0
    for r in rs:
        den = scalar_f(r * x_grid + 1.0 - r)
        ok = den > 1e-300
        if np.any(ok):
            best = max(best, float(np.max(num[ok] / den[ok])))
    return best


def h_min_curve(gamma: float) -> float:
    """h_min(gamma) = (2 e^2 - gamma) / ((1-gamma) f(1-gamma))."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    return (TWO_E_SQ - gamma) / ((1.0 - gamma) * scalar_f(1.0 - gamma))


def minimize_h_min(grid_resolution: float = 1e-3) -> tuple[float, float]:
    """Locate the minimizer of h_min(gamma): coarse grid, then golden section.

    Returns (gamma_star, h_min_star) with gamma resolved to 1e-6.
    """
    gammas = np.arange(grid_resolution, 1.0, grid_resolution)
    values = [h_min_curve(g) for g in gammas]
    k = int(np.argmin(values))
    lo = gammas[max(k - 1, 0)]
    hi = gammas[min(k + 1, gammas.size - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = h_min_curve(c), h_min_curve(d_)
    while b - a > 1e-6:
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = h_min_curve(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = h_min_curve(d_)
    gamma_star = 0.5 * (a + b)
    return gamma_star, h_min_curve(gamma_star)


# ---------------------------------------------------------------------------
# Counterexample dimension search
# ---------------------------------------------------------------------------

def counterexample_margin(d: int, gamma: float) -> float:
    """M_d((f(1-gamma)/2) ln d) + ln(1-gamma); positive means a counterexample."""
    x = 0.5 * scalar_f(1.0 - gamma) * math.log(d)
    if x > d * math.log(d):
        raise DomainError("constraint argument exceeds d ln d")
    return m_d(x, d).value + math.log(1.0 - gamma)


def counterexample_condition(d: int, gamma: float) -> bool:
    return counterexample_margin(d, gamma) > 0.0


def smallest_counterexample_d(gamma: float, d_max: int = 10 ** 7) -> int | None:
    """Smallest d >= 2 with the counterexample condition true, or None.

    Exponential bracketing followed by bisection; the endpoint pair is
    re-verified so the result is the true flip point even if the margin were
    locally non-monotone.
    """
    if counterexample_condition(2, gamma):
        return 2
    if not counterexample_condition(d_max, gamma):
        return None
    hi = 4
    while hi < d_max and not counterexample_condition(hi, gamma):
        hi *= 2
    hi = min(hi, d_max)
    lo = max(hi // 2, 2)
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if counterexample_condition(mid, gamma):
            hi = mid
        else:
            lo = mid
    # Walk down if the flip point is not exact (defensive; the margin is
    # monotone in d throughout the searched range in practice).
    while hi > 2 and counterexample_condition(hi - 1, gamma):
        hi -= 1
    return hi


@dataclass(frozen=True)
class SearchResult:
    gamma_star: float
    d_star: int
    objective: float
    grid_resolution: float


def dmin_search(gamma_grid_resolution: float = 1e-3, gamma_lo: float = 0.70,
                gamma_hi: float = 0.83, d_max: int = 10 ** 7) -> SearchResult:
    """Minimize the smallest counterexample dimension over a gamma grid.

    The grid is built on integer multiples of the resolution so that round
    values such as 0.762 are hit exactly.  Ties break toward the smaller
    gamma.  The returned pair satisfies the condition at d_star and fails at
    d_star - 1.
    """
    if gamma_grid_resolution > 1e-3 + 1e-15:
        raise DomainError("gamma grid resolution must be <= 1e-3")
    k_lo = round(gamma_lo / gamma_grid_resolution)
    k_hi = round(gamma_hi / gamma_grid_resolution)
    best_gamma, best_d = None, None
    for k in range(k_lo, k_hi + 1):
        gamma = k * gamma_grid_resolution
        d_star = smallest_counterexample_d(gamma, d_max)
        if d_star is None:
            continue
        if best_d is None or d_star < best_d:
            best_gamma, best_d = gamma, d_star
    if best_d is None:
        raise AddlabError("no counterexample dimension found on the gamma grid")
    if not counterexample_condition(best_d, best_gamma):
        raise AddlabError("internal error: condition fails at the reported optimum")
    if best_d > 2 and counterexample_condition(best_d - 1, best_gamma):
        raise AddlabError("internal error: d_star - 1 also satisfies the condition")
    return SearchResult(best_gamma, best_d, float(best_d), gamma_grid_resolution)


# ---------------------------------------------------------------------------
# alpha, beta, and the master certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaTerm:
    value: float
    positive: bool
    side_condition_ok: bool      # n >= b^2 d^2 ln n


def alpha_term(b: float, n: float, d: int) -> AlphaTerm:
    """alpha = b^2 (n-d)/(3n) - 1 with its positivity and size-regime flags."""
    if n <= d or d < 1:
        raise DomainError("requires n > d >= 1")
    value = b * b * (n - d) / (3.0 * n) - 1.0
    return AlphaTerm(value, value > 0.0, n >= b * b * d * d * math.log(n))


@dataclass(frozen=True)
class BetaTerm:
    value: float
    positive: bool


def beta_term(d: int, n: float) -> BetaTerm:
    """beta = 1/2 - (d^2 + 2)(1 - d ln d / n)^(n-1) with its sign flag."""
    if n <= d or d < 1:
        raise DomainError("requires n > d >= 1")
    a = d * math.log(d) / n
    if a < 1.0:
        decay = math.exp((n - 1.0) * math.log1p(-a))
    else:
        decay = (1.0 - a) ** (int(n) - 1)
    value = 0.5 - (d * d + 2) * decay
    return BetaTerm(value, value > 0.0)


@dataclass(frozen=True)
class CertificateReport:
    """Evaluation of the master two-term bound on the bad-channel probability.

    ``total`` = term_typicality + term_main.  When ``valid`` is true and
    ``total`` < 1, a channel with S_min > ln d - h/d exists at these (n, d).
    The main term uses log h-tilde = M_d(h f(1-gamma) - eta) directly; the
    closed-form surrogate (h f(1-gamma) - eta - 1)/(2 e^2 - 1), a lower
    bound on exp(M_d) valid for arguments >= 2 e^2, is reported alongside
    with its own applicability flag.
    """

    n: float
    d: int
    h: float
    gamma: float
    b: float
    t: float
    alpha: float
    beta: float
    eta: float
    eps_m: float
    md_argument: float
    log_h_tilde: float
    masymp_h_tilde: float
    masymp_applicable: bool
    log_term_typicality: float
    log_term_main: float
    term_typicality: float
    term_main: float
    total: float
    valid: bool
    existence_established: bool
    smin_lower_if_established: float
    violated_preconditions: list[str] = field(default_factory=list)


def certificate_evaluate(n: float, d: int, h: float, gamma: float, b: float,
                         t: float) -> CertificateReport:
    """Evaluate the certificate at one parameter point, all in log space.

    term_typicality = (2d/(d-1)!) exp(-alpha d^2 ln n)
    term_main = ((1-gamma)/(beta (d-1)!)) exp(d^2 ln n + d L - n (ln(1-gamma) + L))

    with L = M_d(h f(1-gamma) - eta).  Preconditions are reported by name;
    the report is always produced and never raises on a regime violation.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if n <= d or d < 1:
        raise DomainError("requires n > d >= 1")
    ln_n = math.log(n)
    alpha = alpha_term(b, n, d)
    beta = beta_term(d, n)
    eta = eta_term(d, n, t)
    f1g = scalar_f(1.0 - gamma)
    x = h * f1g - (eta.value if eta.valid else float("inf"))

    violated = []
    if d < 3:
        violated.append("d_ge_3")
    if not b > math.sqrt(3.0):
        violated.append("b_gt_sqrt3")
    if not t >= b + 4.0:
        violated.append("t_ge_b_plus_4")
    if not alpha.positive:
        violated.append("alpha_positive")
    if not alpha.side_condition_ok:
        violated.append("n_ge_b2d2_logn")
    if not d * b * math.sqrt(ln_n / n) <= 1.0:
        violated.append("dt_condition")
    if not beta.positive:
        violated.append("beta_positive")
    if not eta.valid:
        violated.append("eps_m_lt_1")
    md_ok = math.isfinite(x) and 0.0 <= x <= d * math.log(d) and d >= 2
    if not md_ok:
        violated.append("md_argument_in_domain")

    log_h_tilde = m_d(x, d).value if md_ok else float("nan")
    masymp_applicable = md_ok and x >= TWO_E_SQ
    masymp_h_tilde = (x - 1.0) / (TWO_E_SQ - 1.0) if md_ok and x > 1.0 else float("nan")

    lgamma_d = math.lgamma(d)  # ln (d-1)!
    log_typ = math.log(2.0 * d) - lgamma_d - (alpha.value * d * d * ln_n
                                              if math.isfinite(alpha.value) else 0.0)
    if md_ok and beta.value > 0.0:
        log_main = (math.log1p(-gamma) - math.log(beta.value) - lgamma_d
                    + d * d * ln_n + d * log_h_tilde
                    - n * (math.log1p(-gamma) + log_h_tilde))
    else:
        log_main = float("inf")

    def safe_exp(v: float) -> float:
        if v > 700.0:
            return float("inf")
        return math.exp(v) if math.isfinite(v) else float("inf")

    term_typ = safe_exp(log_typ)
    term_main = safe_exp(log_main)
    total = term_typ + term_main
    valid = not violated
    established = valid and total < 1.0
    return CertificateReport(
        n=n, d=d, h=h, gamma=gamma, b=b, t=t,
        alpha=alpha.value, beta=beta.value,
        eta=eta.value if eta.valid else float("nan"), eps_m=eta.eps_m,
        md_argument=x, log_h_tilde=log_h_tilde,
        masymp_h_tilde=masymp_h_tilde, masymp_applicable=masymp_applicable,
        log_term_typicality=log_typ, log_term_main=log_main,
        term_typicality=term_typ, term_main=term_main, total=total,
        valid=valid, existence_established=established,
        smin_lower_if_established=math.log(d) - h / d,
        violated_preconditions=violated,
    )


# ---------------------------------------------------------------------------
# Maximal-violation estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeltaSMaxReport:
    value: float
    d: int
    h: float
    gamma: float
    md_value: float
    margin: float


def delta_s_max_bound(gamma: float = 0.762, base_dim: int = 38590) -> DeltaSMaxReport:
    """Lower bound on the maximal additivity violation.

    Sets h = ln(base_dim)/2 and d = floor(exp(2h + 1)); the gap (ln d - 2h)/d
    is maximized at that d and equals 1/d.  The construction is only valid if
    M_d(f(1-gamma) h) + ln(1-gamma) > 0, which is verified and raised as a
    hard error on failure (it would indicate an implementation bug).
    """
    h = 0.5 * math.log(base_dim)
    d = math.floor(math.exp(2.0 * h + 1.0))
    x = scalar_f(1.0 - gamma) * h
    sol = m_d(x, d)
    margin = sol.value + math.log(1.0 - gamma)
    if margin <= 0.0:
        raise AddlabError(
            f"internal inequality failed: M_d margin {margin:.3e} <= 0 at d={d}")
    return DeltaSMaxReport(1.0 / d, d, h, gamma, sol.value, margin)
