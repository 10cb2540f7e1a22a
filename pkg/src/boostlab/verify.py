"""Invariant suites behind ``boostlab verify``.

Each check draws its own random instances from a named substream, compares
the library against a brute-force or closed-form reference and reports the
pass count with the worst slack observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .boosting import run_kale_smoothboost, run_quantumboost
from .bregman import (
    DensityTarget,
    capped_density,
    exact_projection_constant,
    project_approx,
    sample_high_density,
    verify_approx_definition,
)
from .diagnostics import check_projection_entropy, check_regret_bound, potential_diagnostics, weight_floor_check
from .learners import PlantedLearner, RandomLossLearner
from .measures import density, kl_measures, kl_re_identity_residual
from .quantum import (
    GROVER_CONSTANT,
    MeanEstimator,
    QueryLedger,
    amplitude_estimate,
    discretize,
    prepare_smooth_samples,
    statevector_crosscheck,
)
from .rng import substream
from .tasks import SyntheticTask, generate_task

SUITES = ("identities", "projections", "estimators", "bounds")


@dataclass
class CheckResult:
    name: str
    passed: int
    total: int
    worst: float
    detail: str = ""

    @property
    def ok(self):
        return self.passed == self.total

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.passed}/{self.total} {self.detail} (worst {self.worst:.3g})"


def random_measure(rng, m, zeros=True):
    """Entries in (0, 1], optionally with some exact zeros."""
    M = rng.random(m) ** rng.uniform(0.3, 3.0)
    M = np.maximum(M, 1e-9)
    if zeros and m > 1 and rng.random() < 0.5:
        M[rng.random(m) < rng.uniform(0, 0.5)] = 0.0
        if not M.any():
            M[0] = 1.0
    return M


def bisection_constant(N, epsilon, iters=200):
    """Reference root of density(min(1, c N)) = epsilon by plain bisection on c."""
    if capped_density(N, 1.0) >= epsilon:
        return 1.0
    lo, hi = 1.0, 2.0
    while capped_density(N, hi) < epsilon:
        lo, hi = hi, hi * 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if capped_density(N, mid) < epsilon:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return hi


# identities ---------------------------------------------------------------

def check_kl_re_identity(trials, seed):
    rng = substream(seed, "verify-identity")
    worst = 0.0
    ok = 0
    for _ in range(trials):
        m = int(rng.integers(1, 1025))
        A = random_measure(rng, m)
        B = random_measure(rng, m, zeros=False)
        r = abs(kl_re_identity_residual(A, B))
        worst = max(worst, r)
        ok += r <= 1e-10
    return CheckResult("kl-re-identity", ok, trials, worst, "residual <= 1e-10")


def check_kl_nonnegative(trials, seed):
    rng = substream(seed, "verify-kl")
    worst = 0.0
    ok = 0
    for _ in range(trials):
        m = int(rng.integers(1, 513))
        v = kl_measures(random_measure(rng, m), random_measure(rng, m, zeros=False))
        worst = min(worst, v)
        ok += v >= -1e-12
    return CheckResult("kl-nonnegative", ok, trials, worst, "KL >= 0")


# projections ---------------------------------------------------------------

def _random_instance(rng, max_m=512, headroom=1.0):
    """Random (N, epsilon) with epsilon * headroom attainable on the support of N."""
    m = int(rng.integers(2, max_m + 1))
    N = random_measure(rng, m)
    supp = np.count_nonzero(N)
    eps = float(rng.uniform(0.01, max(0.011, min(0.9, supp / m / headroom))))
    return N, eps


def below_density(rng, N, epsilon):
    """Scale N down so that it needs projecting (density < epsilon)."""
    d = density(N)
    return N * (rng.uniform(0.05, 0.95) * epsilon / d) if d >= epsilon else N


def check_projection_oracle(trials, seed):
    rng = substream(seed, "verify-projection")
    worst = 0.0
    ok = 0
    for _ in range(trials):
        N, eps = _random_instance(rng)
        c = exact_projection_constant(N, eps)
        c_ref = bisection_constant(N, eps)
        dc = abs(c - c_ref)
        dw = abs(capped_density(N, c) - capped_density(N, c_ref)) * N.size
        worst = max(worst, dc / max(1.0, c_ref))
        ok += dc <= 1e-9 * max(1.0, c_ref) and dw <= 1e-9 * N.size
    return CheckResult("projection-vs-bisection", ok, trials, worst, "|dc| <= 1e-9")


def check_bregman_theorem(trials, seed):
    rng = substream(seed, "verify-bregman")
    worst = np.inf
    ok = 0
    for _ in range(trials):
        N, eps = _random_instance(rng, 256)
        N = below_density(rng, N, eps)
        P = np.minimum(1.0, exact_projection_constant(N, eps) * N)
        M = sample_high_density(rng, N.size, eps, "random", N > 0)
        slack = kl_measures(M, N) - kl_measures(M, P) - kl_measures(P, N)
        worst = min(worst, slack)
        ok += slack >= -1e-9
    return CheckResult("bregman-pythagorean", ok, trials, worst, "slack >= -1e-9")


def check_approx_window(trials, seed):
    rng = substream(seed, "verify-approx")
    worst = np.inf
    ok = 0
    for _ in range(trials):
        zeta = float(rng.uniform(0.01, 0.25))
        N, eps = _random_instance(rng, 256, 1 + zeta)
        N = below_density(rng, N, eps)
        est = MeanEstimator("exact-pass", mu_floor=eps / 2)
        proj = project_approx(N, DensityTarget(eps, zeta), est, 0.1)
        Mt = proj.realize(N)
        rho = density(Mt)
        M_star = np.minimum(1.0, exact_projection_constant(N, eps) * N)
        rep = verify_approx_definition(Mt, M_star, N, zeta * eps * N.size, 6, int(rng.integers(2**31)), eps)
        in_window = eps - 1e-12 <= rho <= (1 + zeta) * eps + 1e-12
        worst = min(worst, zeta * eps * N.size - rep.worst_slack)
        ok += in_window and rep.passed
    return CheckResult("approx-window-and-alpha", ok, trials, worst, "window holds, alpha slack >= 0")


# estimators ----------------------------------------------------------------

def check_amplitude_on_grid(trials, seed):
    rng = substream(seed, "verify-ae-grid")
    ok = 0
    worst = 0.0
    for _ in range(trials):
        A = 1 << int(rng.integers(1, 7))
        grid = 4 * A
        j = int(rng.integers(0, grid // 2 + 1))
        a = math.sin(math.pi * j / grid) ** 2
        lam = amplitude_estimate(a, A, 0.1, rng)
        err = abs(lam - math.sin(math.pi * j / grid))
        worst = max(worst, err)
        ok += err <= 1e-12
    return CheckResult("amplitude-on-grid", ok, trials, worst, "exact recovery")


def check_amplitude_off_grid(trials, seed, delta=0.1):
    rng = substream(seed, "verify-ae")
    hits = 0
    for _ in range(trials):
        A = 1 << int(rng.integers(2, 7))
        a = float(rng.random())
        hits += abs(amplitude_estimate(a, A, delta, rng) - math.sqrt(a)) <= 1.0 / A
    freq = hits / trials
    return CheckResult("amplitude-off-grid", int(freq >= 1 - delta), 1, freq,
                       f"success frequency {freq:.4f} >= {1 - delta}")


def check_mean_estimation(trials, seed, delta=0.1, zeta=0.25, n=1024):
    rng = substream(seed, "verify-mean")
    est = MeanEstimator("simulated-quantum", zeta=zeta, delta=delta, mu_floor=0.25,
                        rng=substream(seed, "verify-mean-est"))
    hits = 0
    worst_ratio = 0.0
    for _ in range(trials):
        mu_target = rng.uniform(0.25, 0.9)
        x = np.clip(rng.normal(mu_target, 0.1, n), 0, 1)
        mu = float(np.mean(x))
        if mu < est.mu_floor:
            x = np.maximum(x, est.mu_floor)
            mu = float(np.mean(x))
        before = est.ledger.grover_applications
        mu_hat = est.estimate(x)
        used = est.ledger.grover_applications - before
        worst_ratio = max(worst_ratio, used * math.sqrt(est.mu_floor) * zeta / math.log(1 / delta))
        hits += abs(mu_hat - mu) <= zeta * mu
    freq = hits / trials
    ok = freq >= 1 - delta and worst_ratio <= GROVER_CONSTANT
    return CheckResult("mean-estimation", int(ok), 1, freq,
                       f"success {freq:.4f}, grover/(ln(1/delta)/(sqrt(floor) zeta)) {worst_ratio:.1f} <= {GROVER_CONSTANT:g}")


def check_statevector(trials, seed):
    rng = substream(seed, "verify-statevector")
    ok = 0
    worst = 0.0
    for _ in range(trials):
        N = 1 << int(rng.integers(0, 11))
        b = int(rng.integers(1, 11))
        x = rng.random(N)
        p = statevector_crosscheck(x, b)
        err = abs(p - discretize(x, b)[1].mean())
        worst = max(worst, err)
        ok += err <= 1e-12
    return CheckResult("statevector-crosscheck", ok, trials, worst, "|p - mean(xbar)| <= 1e-12")


def check_sampler(trials, seed, draws=20000):
    rng = substream(seed, "verify-sampler")
    ok = 0
    worst = 1.0
    for _ in range(trials):
        m = int(rng.integers(2, 40))
        M = np.maximum(rng.random(m), 0.05)
        ledger = QueryLedger()
        idx = prepare_smooth_samples(M, m, draws, M.sum(), rng, ledger)
        p = stats.chisquare(np.bincount(idx, minlength=m), M / M.sum() * draws).pvalue
        worst = min(worst, p)
        ok += p > 1e-3
    return CheckResult("sampler-goodness-of-fit", ok, trials, worst, "chi-square p > 1e-3")


# bounds --------------------------------------------------------------------

def _instrumented_runs(trials, seed):
    S = generate_task(SyntheticTask("junta", n=12, k=3, seed=seed), 300)
    for j in range(trials):
        rng = substream(seed + j, "verify-bounds")
        gamma = float(rng.choice([0.15, 0.2, 0.25]))
        eps = float(rng.choice([0.1, 0.2]))
        T = int(rng.integers(20, 80))
        adversarial = j % 3 == 2
        learner = (RandomLossLearner(substream(seed + j, "adversary"), float(rng.uniform(0.3, 0.9)))
                   if adversarial else PlantedLearner.seeded(gamma, S.m, substream(seed + j, "learner")))
        kw = dict(dense_trace=True, seed=seed + j, on_violation="ignore" if adversarial else "abort")
        if j % 4 == 3:
            _, rec = run_kale_smoothboost(S, learner, gamma, eps, T, **kw)
        else:
            mode = "exact-pass" if j % 2 else "simulated-quantum"
            _, rec = run_quantumboost(S, learner, gamma, eps, mode, T=T, **kw)
        yield rec, rng


def check_bounds(trials, seed):
    results = {k: [0, 0, np.inf] for k in ("potential", "regret", "projection-entropy", "weight-floor",
                                             "implicit-equivalence")}

    def note(key, ok, slack):
        r = results[key]
        r[0] += bool(ok)
        r[1] += 1
        r[2] = min(r[2], slack)

    for rec, rng in _instrumented_runs(trials, seed):
        m = rec.m
        D = sample_high_density(rng, m, rec.epsilon, "tight")
        D = D / D.sum()
        pot = potential_diagnostics(rec, D, strict=False)
        note("potential", pot.passed, min(pot.worst_update_slack, pot.worst_proj_slack))
        reg = check_regret_bound(rec, D, strict=False)
        note("regret", reg.passed, reg.slack)
        ent = check_projection_entropy(rec, rng, 4, strict=False)
        note("projection-entropy", ent.passed, rec.zeta - max(ent.worst_vs_update, ent.worst_vs_exact))
        min_w, floor, max_entry = weight_floor_check(rec)
        note("weight-floor", min_w >= floor and max_entry <= 1.0, min_w - floor)
        if rec.measure is not None:
            err = max(float(np.max(np.abs(rec.measure.evaluate(upto=t) - M)))
                      for t, M in enumerate(rec.trace.measures))
            note("implicit-equivalence", err <= 1e-10, -err)
    out = []
    for key, (ok, total, worst) in results.items():
        out.append(CheckResult(key, ok, total, float(worst) if total else 0.0))
    return out


def run_suite(name, trials=None, seed=0):
    """Run one suite (or "all") and return its list of ``CheckResult``."""
    if name == "all":
        return [r for s in SUITES for r in run_suite(s, trials, seed)]
    if name == "identities":
        n = trials or 500
        return [check_kl_re_identity(n, seed), check_kl_nonnegative(n, seed)]
    if name == "projections":
        n = trials or 100
        return [check_projection_oracle(2 * n, seed), check_bregman_theorem(n, seed),
                check_approx_window(n, seed)]
    if name == "estimators":
        n = trials or 500
        return [check_amplitude_on_grid(100, seed), check_amplitude_off_grid(max(n, 1000), seed),
                check_mean_estimation(n, seed), check_statevector(50, seed), check_sampler(5, seed)]
    if name == "bounds":
        return check_bounds(trials or 12, seed)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
