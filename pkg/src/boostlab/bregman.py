"""KL (Bregman) projections onto the high-density set {M : density(M) >= epsilon}.

The exact projection of N has the form min(1, c N) with the smallest c >= 1
reaching density epsilon. The approximate projection searches for a constant
c_tilde whose realized density lies in [epsilon, (1 + zeta) epsilon], using
only density estimates from a ``MeanEstimator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import capped_sum
from .errors import EstimatorFailure, Infeasible
from .measures import as_measure, density, kl_measures

C_CAP_LOG2 = 60


@dataclass(frozen=True)
class DensityTarget:
    epsilon: float
    zeta: float

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0 < self.zeta < 0.5:
            raise ValueError(f"zeta must be in (0, 0.5), got {self.zeta}")

    @property
    def window(self):
        """Acceptance window for density *estimates*."""
        e, z = self.epsilon, self.zeta
        return e * (1 + z / 4), e * (1 + 3 * z / 4)

    def alpha(self, m):
        return self.zeta * self.epsilon * m


@dataclass
class ImplicitProjection:
    c_tilde: float
    density_estimate: float
    steps: int
    estimator_queries: int
    source: object = field(default=None, repr=False, compare=False)

    def realize(self, N=None):
        N = self.source if N is None else N
        if N is None:
            raise ValueError("no source measure to realize against")
        return np.minimum(1.0, self.c_tilde * np.asarray(N, dtype=np.float64))

    def to_json(self):
        return {
            "c_tilde": self.c_tilde,
            "density_estimate": self.density_estimate,
            "steps": self.steps,
            "estimator_queries": self.estimator_queries,
        }


def capped_density(N, c):
    N = np.asarray(N, dtype=np.float64)
    return capped_sum(N, c) / N.size


def exact_projection_constant(N, epsilon):
    """Smallest c >= 1 with density(min(1, c N)) == epsilon (1.0 if already dense enough).

    Solved exactly on the sorted breakpoints of the piecewise-linear map
    c -> |min(1, c N)|.
    """
    N = as_measure(N)
    m = N.size
    target = epsilon * m
    if capped_sum(N, 1.0) >= target:
        return 1.0
    s = np.sort(N[N > 0])[::-1]
    if s.size < target - 1e-9:
        raise Infeasible(f"support {s.size} is smaller than epsilon*m = {target:.6g}")
    # tail[k] = sum of s[k:], the uncapped mass when the k largest entries are capped
    tail = np.cumsum(s[::-1])[::-1]
    k = np.arange(s.size)
    prev = np.concatenate(([np.inf], s[:-1]))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        c = (target - k) / tail
        ok = (c > 0) & (c * s <= 1.0) & (c * prev >= 1.0)
        # every supported entry capped: reached exactly at c = 1 / min entry
        c = c[np.argmax(ok)] if np.any(ok) else 1.0 / s[-1]
    if not np.isfinite(c):
        raise Infeasible("projection constant overflows (entries too close to 0)")
    return float(max(1.0, c))


def project_exact(N, epsilon):
    N = as_measure(N)
    return np.minimum(1.0, exact_projection_constant(N, epsilon) * N)


def project_approx(N, target, estimator, delta, m=None):
    """Binary search for c_tilde using density estimates at precision zeta/8.

    ``N`` is a dense measure or a callable returning entries for index arrays
    (then ``m`` is required). Doubling from c = 2 brackets the constant (cap
    2**60), then bisection runs at most ceil(log2(c_hi * 8 / (epsilon zeta)))
    steps. The failure budget ``delta`` is split evenly between the two phases
    and across the calls within each.
    """
    if callable(N):
        if m is None:
            raise ValueError("m is required with a callable measure")
        entries = N
        source = None
    else:
        source = as_measure(N)
        m = source.size
        entries = source.__getitem__
        if np.count_nonzero(source) < target.epsilon * m - 1e-9:
            raise Infeasible("support smaller than epsilon*m")
    eps, zeta = target.epsilon, target.zeta
    lo_win, hi_win = target.window
    est_zeta = zeta / 8
    q0 = estimator.ledger.oracle_queries
    steps = 0

    def probe(c, d):
        nonlocal steps
        steps += 1
        return estimator.estimate(lambda idx: np.minimum(1.0, c * entries(idx)), m,
                                  zeta=est_zeta, delta=d)

    def done(c, est):
        return ImplicitProjection(float(c), float(est), steps,
                                  estimator.ledger.oracle_queries - q0, source)

    d_double = delta / 2 / (C_CAP_LOG2 + 1)
    est = probe(1.0, d_double)
    if est >= lo_win:
        return done(1.0, est)
    c_lo, c = 1.0, 2.0
    while True:
        est = probe(c, d_double)
        if lo_win <= est <= hi_win:
            return done(c, est)
        if est > hi_win:
            c_hi = c
            break
        c_lo = c
        c *= 2.0
        if c > 2.0 ** C_CAP_LOG2:
            raise Infeasible(f"density estimate still {est:.6g} < {lo_win:.6g} at c = 2**{C_CAP_LOG2}")
    n_steps = math.ceil(math.log2(c_hi * 8 / (eps * zeta)))
    d_bis = delta / 2 / n_steps
    for _ in range(n_steps):
        mid = 0.5 * (c_lo + c_hi)
        est = probe(mid, d_bis)
        if lo_win <= est <= hi_win:
            return done(mid, est)
        if est < lo_win:
            c_lo = mid
        else:
            c_hi = mid
    raise EstimatorFailure(
        f"bisection did not reach the window [{lo_win:.6g}, {hi_win:.6g}] in {n_steps} steps",
        step=steps,
    )


def sample_high_density(rng, m, epsilon, kind="random", support=None):
    """A random member of the high-density set, supported inside ``support``.

    kinds: "random" (random weights scaled and capped to a random density in
    [epsilon, 1]), "tight" (same, density exactly epsilon), "uniform"
    (epsilon m spread evenly over the support) and "indicator" (0/1 on
    ceil(epsilon m) support points).
    """
    idx = np.arange(m) if support is None else np.flatnonzero(support)
    need = epsilon * m
    if idx.size < need - 1e-9:
        raise Infeasible("support too small for a member of the high-density set")
    M = np.zeros(m)
    if kind == "uniform":
        M[idx] = min(1.0, need / idx.size)
        return M
    if kind == "indicator":
        k = min(idx.size, math.ceil(need - 1e-9))
        M[rng.choice(idx, size=k, replace=False)] = 1.0
        return M
    w = np.zeros(m)
    w[idx] = rng.random(idx.size) ** rng.uniform(0.5, 4.0)
    w[idx] = np.maximum(w[idx], 1e-6)
    d = epsilon if kind == "tight" else rng.uniform(epsilon, min(1.0, idx.size / m))
    if density(w) >= d:
        return w * (d / density(w)) if kind == "tight" else w
    return np.minimum(1.0, exact_projection_constant(w, d) * w)


@dataclass
class ApproxCheckReport:
    condition1: bool
    density: float
    epsilon: float
    worst_slack: float
    alpha: float
    n_checked: int

    @property
    def passed(self):
        return self.condition1 and self.worst_slack <= self.alpha + 1e-9


def verify_approx_definition(M_tilde, M_star, N, alpha, samples, seed, epsilon=None):
    """Check that M_tilde is an alpha-approximation of M_star = P(N).

    Condition 1 (membership) is exact; condition 2 is tested on ``samples``
    random members of the high-density set plus uniform and indicator extreme
    points. ``worst_slack`` is max KL(M||M_tilde) - KL(M||M_star).
    """
    M_tilde = np.asarray(M_tilde, dtype=np.float64)
    M_star = np.asarray(M_star, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    m = N.size
    eps = density(M_star) if epsilon is None else epsilon
    rho = density(M_tilde)
    cond1 = rho >= eps - 1e-12
    support = (M_tilde > 0) & (M_star > 0) & (N > 0)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    checked = 0
    kinds = ["uniform", "indicator"] + ["tight", "random", "indicator"] * (samples // 3 + 1)
    for kind in kinds[: max(samples, 2)]:
        try:
            M = sample_high_density(rng, m, eps, kind, support)
        except Infeasible:
            break
        worst = max(worst, kl_measures(M, M_tilde) - kl_measures(M, M_star))
        checked += 1
    return ApproxCheckReport(bool(cond1), rho, eps, float(worst), alpha, checked)
