"""Classically simulated quantum subroutines with query accounting.

Amplitude estimation is simulated by sampling the exact phase-estimation
outcome distribution, mean estimation is built on it, and example
preparation is realized by rejection sampling while the ledger is charged the
quantum rate. ``statevector_crosscheck`` materializes the controlled-rotation
state that turns a mean into an amplitude.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FloorViolation, SizeLimit

MODES = ("exact-pass", "monte-carlo", "simulated-quantum")

# Grid padding over the accuracy parameter A: one on-grid step of the phase
# register must move sin(theta) by at most 1/A, i.e. grid >= pi * A.
GRID_PADDING = 4
MEDIAN_REPS_FACTOR = 18
# grover_applications per estimate_mean call <= GROVER_CONSTANT * ln(1/delta)
# / (sqrt(mu_floor) * zeta), valid for delta <= 0.1 (see README).
GROVER_CONSTANT = 300.0

# A broken weight floor is declared after max(2m, REJECTION_RUN_FLOOR) / eps'
# consecutive rejections; with the floor intact such a run has probability at
# most exp(-REJECTION_RUN_FLOOR) at any position, even for tiny m.
REJECTION_RUN_FLOOR = 64

MAX_STATEVECTOR_INDEX = 2 ** 12
MAX_STATEVECTOR_BITS = 10


@dataclass
class QueryLedger:
    oracle_queries: int = 0
    grover_applications: int = 0
    samples_drawn: int = 0
    modeled_quantum_cost: float = 0.0

    def snapshot(self):
        return asdict(self)

    def merged(self, other):
        return QueryLedger(
            self.oracle_queries + other.oracle_queries,
            self.grover_applications + other.grover_applications,
            self.samples_drawn + other.samples_drawn,
            self.modeled_quantum_cost + other.modeled_quantum_cost,
        )


def _next_pow2(x):
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0)) - 1e-12))


def median_reps(delta):
    return max(1, math.ceil(MEDIAN_REPS_FACTOR * math.log(1.0 / delta)))


def phase_outcome_pmf(omega, grid):
    """Distribution of the phase register for eigenphase ``omega`` (in turns)."""
    pos = omega * grid
    nearest = round(pos)
    if abs(pos - nearest) < 1e-9:
        pmf = np.zeros(grid)
        pmf[int(nearest) % grid] = 1.0
        return pmf
    y = np.arange(grid)
    d = omega - y / grid
    pmf = np.sin(grid * np.pi * d) ** 2 / (grid ** 2 * np.sin(np.pi * d) ** 2)
    return pmf / pmf.sum()


def amplitude_estimate(a, A, delta, rng, ledger=None, grid_size=None):
    """Estimate sqrt(a) to within 1/A with probability >= 1 - delta.

    The phase register has ``grid_size`` (default ``GRID_PADDING * A``)
    outcomes; the median of ``median_reps(delta)`` runs is returned. Only the
    +theta eigenphase is sampled: the -theta branch yields y -> grid - y,
    which maps to the same sin(pi y / grid).
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"amplitude must be in [0, 1], got {a}")
    if A < 1:
        raise ValueError("A must be a positive integer")
    grid = int(grid_size) if grid_size is not None else GRID_PADDING * int(A)
    theta = math.asin(math.sqrt(a))
    pmf = phase_outcome_pmf(theta / math.pi, grid)
    reps = median_reps(delta)
    ys = rng.choice(grid, size=reps, p=pmf)
    if ledger is not None:
        ledger.grover_applications += reps * grid
        ledger.oracle_queries += 2 * reps * grid
    return float(np.median(np.sin(np.pi * ys / grid)))


def accuracy_for(mu_floor, zeta):
    """Smallest power of two A with 1/A <= sqrt(mu_floor) * zeta / 2."""
    return _next_pow2(2.0 / (math.sqrt(mu_floor) * zeta))


@dataclass
class MeanEstimator:
    """Pluggable estimator of the mean of values in [0, 1].

    ``mu_floor`` is the promised lower bound on the mean; in simulated-quantum
    and monte-carlo modes a broken promise silently voids the accuracy
    guarantee. Exact-pass mode counts broken promises in ``floor_violations``
    (or raises when ``strict_floor`` is set).
    """

    mode: str = "simulated-quantum"
    zeta: float = 0.25
    delta: float = 0.1
    mu_floor: float = 0.05
    rng: np.random.Generator = field(default_factory=np.random.default_rng, repr=False)
    ledger: QueryLedger = field(default_factory=QueryLedger)
    strict_floor: bool = False
    floor_violations: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.zeta < 0.5:
            raise ValueError("zeta must be in (0, 0.5)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if not self.mu_floor > 0:
            raise ValueError("mu_floor must be positive")

    def estimate(self, values, n=None, *, zeta=None, delta=None):
        zeta = self.zeta if zeta is None else zeta
        delta = self.delta if delta is None else delta
        if callable(values):
            if n is None:
                raise ValueError("n is required with a callable oracle")
            oracle = values
        else:
            arr = np.asarray(values, dtype=np.float64)
            n = arr.size
            oracle = arr.__getitem__
        if self.mode == "exact-pass":
            mu = math.fsum(oracle(np.arange(n))) / n
            self.ledger.oracle_queries += n
            if mu < self.mu_floor:
                self.floor_violations += 1
                if self.strict_floor:
                    raise FloorViolation(f"mean {mu:.6g} below promised floor {self.mu_floor:.6g}")
            return mu
        if self.mode == "monte-carlo":
            s = math.ceil(3.0 * math.log(2.0 / delta) / (self.mu_floor * zeta ** 2))
            idx = self.rng.integers(n, size=s)
            self.ledger.oracle_queries += s
            return float(np.mean(oracle(idx)))
        # simulated-quantum: the true mean is the amplitude of the flag-1 branch
        mu = math.fsum(oracle(np.arange(n))) / n
        A = accuracy_for(self.mu_floor, zeta)
        lam = amplitude_estimate(min(1.0, max(0.0, mu)), A, delta, self.rng, self.ledger)
        return lam * lam


def estimate_mean(values, n, est, rng=None):
    """Functional form of ``MeanEstimator.estimate``; ``rng`` overrides ``est.rng``."""
    if rng is not None:
        est.rng = rng
    return est.estimate(values, n)


def quantum_rate(weight_floor, m):
    eps_prime = weight_floor / m
    return math.ceil(1.0 / math.sqrt(eps_prime) - 1e-12)


def prepare_smooth_samples(entries, m, count, weight_floor, rng, ledger, quantum=True):
    """Draw ``count`` indices i with probability M(x_i)/|M| by rejection sampling.

    ``entries`` is a dense measure or a callable returning entries for an index
    array. The ledger gets the classical attempt count in ``samples_drawn`` and,
    when ``quantum``, ceil(1/sqrt(eps')) modeled queries per delivered sample
    with eps' = weight_floor / m.
    """
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    if callable(entries):
        lookup = entries
    else:
        dense = np.asarray(entries, dtype=np.float64)
        lookup = dense.__getitem__
    eps_prime = weight_floor / m
    limit = math.ceil(max(2 * m, REJECTION_RUN_FLOOR) / eps_prime)
    out = np.empty(count, dtype=np.int64)
    got = 0
    run = 0
    attempts = 0
    while got < count:
        need = count - got
        chunk = int(min(max(64, math.ceil(2 * need / eps_prime)), 1 << 20))
        prop = rng.integers(m, size=chunk)
        u = rng.random(chunk)
        acc = np.flatnonzero(u < lookup(prop))
        if acc.size == 0:
            run += chunk
            attempts += chunk
            ledger.oracle_queries += chunk
            if run >= limit:
                ledger.samples_drawn += attempts
                raise FloorViolation(f"{run} consecutive rejections; weight floor {weight_floor:.6g} broken")
            continue
        take = acc[:need]
        gaps = np.diff(take, prepend=-1) - 1
        gaps[0] += run
        if gaps.max() >= limit:
            ledger.samples_drawn += attempts + int(take[0]) + 1
            raise FloorViolation(f"{int(gaps.max())} consecutive rejections; weight floor {weight_floor:.6g} broken")
        out[got:got + take.size] = prop[take]
        got += take.size
        used = int(take[-1]) + 1 if got == count else chunk
        attempts += used
        ledger.oracle_queries += used
        run = 0 if got == count else chunk - 1 - int(acc[-1])
    ledger.samples_drawn += attempts
    if quantum:
        ledger.modeled_quantum_cost += count * quantum_rate(weight_floor, m)
    return out


def prepare_smooth_sample(entries, m, weight_floor, rng, ledger, quantum=True):
    return int(prepare_smooth_samples(entries, m, 1, weight_floor, rng, ledger, quantum)[0])


def discretize(values, bits):
    levels = (1 << bits) - 1
    codes = np.rint(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * levels).astype(np.int64)
    return codes, codes / levels


def statevector_crosscheck(values, bits):
    """Flag-1 probability of (1/sqrt N) sum_i |i>|xbar_i>(sqrt(xbar_i)|1> + sqrt(1-xbar_i)|0>).

    Built by applying the value oracle and then the controlled rotation to an
    explicit (index, value, flag) state tensor; xbar_i is x_i on a ``bits``-bit grid.
    """
    values = np.asarray(values, dtype=np.float64)
    N = values.size
    if N < 1 or N > MAX_STATEVECTOR_INDEX or N & (N - 1):
        raise SizeLimit(f"N must be a power of two <= {MAX_STATEVECTOR_INDEX}, got {N}")
    if not 1 <= bits <= MAX_STATEVECTOR_BITS:
        raise SizeLimit(f"bits must be in [1, {MAX_STATEVECTOR_BITS}], got {bits}")
    codes, _ = discretize(values, bits)
    levels = 1 << bits
    state = np.zeros((N, levels, 2))
    state[:, 0, 0] = 1.0 / math.sqrt(N)
    # value oracle: |i>|0> -> |i>|code_i>, a permutation of the value register
    loaded = np.zeros_like(state)
    loaded[np.arange(N), codes, :] = state[np.arange(N), 0, :]
    # controlled rotation on the flag, one 2x2 block per value-register basis state
    grid_vals = np.arange(levels) / (levels - 1)
    c = np.sqrt(1.0 - grid_vals)
    s = np.sqrt(grid_vals)
    rotated = np.empty_like(loaded)
    rotated[:, :, 0] = c * loaded[:, :, 0] - s * loaded[:, :, 1]
    rotated[:, :, 1] = s * loaded[:, :, 0] + c * loaded[:, :, 1]
    return float(np.sum(rotated[:, :, 1] ** 2))
