"""Acceptance criteria, one test each.

Every test reports a PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in the terminal summary. Reference values come from
oracles written out here (plain bisection, dense numpy replay, closed-form
discretized means) rather than from the library code under test.
"""

import math

import numpy as np
import pytest
from scipy import stats

from boostlab import _fallback
from boostlab.boosting import run_kale_smoothboost, run_quantumboost, theorem_iterations
from boostlab.bregman import (
    DensityTarget,
    exact_projection_constant,
    project_approx,
    sample_high_density,
    verify_approx_definition,
)
from boostlab.diagnostics import (
    check_projection_entropy,
    check_regret_bound,
    potential_diagnostics,
    weight_floor_check,
)
from boostlab.errors import EstimatorFailure, Infeasible
from boostlab.learners import PlantedLearner, RandomLossLearner
from boostlab.measures import kl_measures, relative_entropy
from boostlab.quantum import (
    GRID_PADDING,
    GROVER_CONSTANT,
    MeanEstimator,
    QueryLedger,
    amplitude_estimate,
    prepare_smooth_samples,
    statevector_crosscheck,
)
from boostlab.rng import substream
from boostlab.tasks import SyntheticTask, generate_task

# (label, min weight, required floor, max entry) for every boosting run made here
RUN_STATS = []


def _note_run(label, rec):
    min_w, floor, max_entry = weight_floor_check(rec)
    RUN_STATS.append((label, min_w, floor, max_entry))
    return rec


def _task(m, seed=0, n=20):
    return generate_task(SyntheticTask("junta", n=n, k=3, seed=seed), m)


def _planted(gamma, m, seed):
    return PlantedLearner.seeded(gamma, m, substream(seed, "learner"))


def _measure(rng, m, zeros=True):
    N = rng.random(m) ** rng.uniform(0.3, 3.0)
    if zeros and rng.random() < 0.5:
        N[rng.random(m) < rng.uniform(0, 0.4)] = 0.0
    if not N.any():
        N[0] = 1.0
    return N


def _dense_density(N, c):
    return float(np.mean(np.minimum(1.0, c * N)))


def _bisect(N, eps):
    """Root of the dense density map by bisection to machine resolution."""
    if _dense_density(N, 1.0) >= eps:
        return 1.0
    lo, hi = 1.0, 2.0
    while _dense_density(N, hi) < eps:
        lo, hi = hi, 2 * hi
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if _dense_density(N, mid) < eps:
            lo = mid
        else:
            hi = mid


def _needs_projection(rng, m, eps_hi=0.6):
    """(N, eps) with density(N) < eps and enough support for (1 + 1/4) eps."""
    N = _measure(rng, m)
    support = np.count_nonzero(N) / m
    eps = float(rng.uniform(0.02, max(0.021, min(eps_hi, support / 1.3))))
    d = N.mean()
    if d >= eps:
        N = N * (rng.uniform(0.05, 0.95) * eps / d)
    return N, eps


# --- convergence and schedule ----------------------------------------------------

GRID = [(g, e) for g in (0.05, 0.1, 0.2) for e in (0.05, 0.1)]


@pytest.fixture(scope="module")
def convergence_runs():
    S = _task(2000)
    out = []
    for gamma, eps in GRID:
        for seed in range(10):
            _, rec = run_quantumboost(S, _planted(gamma, S.m, seed), gamma, eps, seed=seed)
            _note_run(f"converge g={gamma} e={eps} s={seed}", rec)
            out.append((gamma, eps, seed, rec.T, rec.R, rec.final_error))
    return out


def test_criterion_01_convergence(convergence_runs, criterion):
    worst = max(err / eps for _, eps, _, _, _, err in convergence_runs)
    bad = [(g, e, s, err) for g, e, s, T, _, err in convergence_runs
           if not (err < e and T == theorem_iterations(e, g))]
    criterion(1, "convergence", not bad,
              f"{len(convergence_runs) - len(bad)}/{len(convergence_runs)} runs below epsilon at theorem T, "
              f"worst error/epsilon {worst:.3f}")


def test_criterion_02_lazy_schedule(convergence_runs, criterion):
    bad = [(g, e, R) for g, e, _, T, R, _ in convergence_runs if R != math.ceil(T / math.ceil(1 / g - 1e-9))]
    at_01 = {R for g, e, _, _, R, _ in convergence_runs if (g, e) == (0.1, 0.1)}
    criterion(2, "lazy schedule", not bad and at_01 == {93},
              f"R == ceil(T/K) in {len(convergence_runs) - len(bad)}/{len(convergence_runs)} runs, "
              f"R at gamma=epsilon=0.1: {sorted(at_01)}")


# --- projections --------------------------------------------------------------------

def test_criterion_03_projection_oracle(criterion):
    rng = np.random.default_rng(3)
    worst_c = worst_w = 0.0
    ok = 0
    for _ in range(200):
        m = int(rng.integers(2, 513))
        N, eps = _needs_projection(rng, m, 0.9)
        c = exact_projection_constant(N, eps)
        c_ref = _bisect(N, eps)
        dc = abs(c - c_ref)
        dw = abs(_dense_density(N, c) - _dense_density(N, c_ref)) * m
        worst_c, worst_w = max(worst_c, dc), max(worst_w, dw / m)
        ok += dc <= 1e-9 and dw <= 1e-9 * m
    criterion(3, "projection oracle", ok == 200,
              f"{ok}/200 instances, max |dc| {worst_c:.2e}, max weight error/m {worst_w:.2e}")


def test_criterion_04_approx_projection(criterion):
    rng = np.random.default_rng(4)
    exact_ok = 0
    worst_def6 = -np.inf
    for _ in range(100):
        m = int(rng.integers(16, 513))
        N, eps = _needs_projection(rng, m)
        zeta = float(rng.uniform(0.0125, 0.125))
        proj = project_approx(N, DensityTarget(eps, zeta), MeanEstimator("exact-pass", mu_floor=eps / 2), 0.1)
        Mt = proj.realize(N)
        rho = Mt.mean()
        M_star = np.minimum(1.0, _bisect(N, eps) * N)
        rep = verify_approx_definition(Mt, M_star, N, zeta * eps * m, 8, int(rng.integers(2 ** 31)), eps)
        worst_def6 = max(worst_def6, rep.worst_slack - zeta * eps * m)
        exact_ok += eps <= rho <= (1 + zeta) * eps and rep.worst_slack <= zeta * eps * m + 1e-9

    hits = 0
    for _ in range(500):
        m = int(rng.integers(16, 513))
        N, eps = _needs_projection(rng, m)
        zeta = float(rng.uniform(0.0125, 0.125))
        est = MeanEstimator("simulated-quantum", mu_floor=eps / 2, rng=rng)
        try:
            Mt = project_approx(N, DensityTarget(eps, zeta), est, 0.1).realize(N)
        except (EstimatorFailure, Infeasible):
            continue
        rho = Mt.mean()
        if eps <= rho <= (1 + zeta) * eps:
            hits += 1
            M_star = np.minimum(1.0, _bisect(N, eps) * N)
            rep = verify_approx_definition(Mt, M_star, N, zeta * eps * m, 2, int(rng.integers(2 ** 31)), eps)
            worst_def6 = max(worst_def6, rep.worst_slack - zeta * eps * m)
    ok = exact_ok == 100 and hits >= 450 and worst_def6 <= 1e-9
    criterion(4, "approximate projection", ok,
              f"exact-pass window {exact_ok}/100, simulated-quantum window {hits}/500, "
              f"max (def-6 slack - zeta eps m) {worst_def6:.3g}")


# --- identities -----------------------------------------------------------------------

def test_criterion_05_kl_re_identity(criterion):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(1, 1025))
        A = _measure(rng, m)
        B = _measure(rng, m, zeros=False) + 1e-12
        wa, wb = A.sum(), B.sum()
        rhs = wa * relative_entropy(A / wa, B / wb) + wa * math.log(wa / wb) + wb - wa
        worst = max(worst, abs(kl_measures(A, B) - rhs))
    criterion(5, "KL-RE identity", worst <= 1e-10, f"max residual {worst:.2e} over 500 pairs")


def test_criterion_06_bregman(criterion):
    rng = np.random.default_rng(6)
    worst = np.inf
    kinds = ("random", "tight", "uniform", "indicator")
    for i in range(100):
        m = int(rng.integers(4, 257))
        N, eps = _needs_projection(rng, m)
        P = np.minimum(1.0, exact_projection_constant(N, eps) * N)
        M = sample_high_density(rng, m, eps, kinds[i % 4], N > 0)
        worst = min(worst, kl_measures(M, N) - kl_measures(M, P) - kl_measures(P, N))
    criterion(6, "Bregman projection inequality", worst >= -1e-9, f"min slack {worst:.3g} over 100 pairs")


# --- instrumented runs ------------------------------------------------------------

def _instrumented(count, seed):
    """Dense-trace runs over both algorithms, both engine estimators and an adversary."""
    S = _task(300, seed, n=12)
    for j in range(count):
        rng = substream(seed + j, "acceptance-run")
        gamma = float(rng.choice([0.1, 0.15, 0.2, 0.25]))
        eps = float(rng.choice([0.05, 0.1, 0.2]))
        T = int(rng.integers(20, 120))
        adversarial = j % 5 == 4
        learner = (RandomLossLearner(substream(seed + j, "adversary"), float(rng.uniform(0.2, 0.9)))
                   if adversarial else _planted(gamma, S.m, seed + j))
        kw = dict(T=T, seed=seed + j, dense_trace=True, on_violation="ignore" if adversarial else "abort")
        if j % 7 == 6:
            _, rec = run_kale_smoothboost(S, learner, gamma, eps, **kw)
        else:
            mode = "exact-pass" if j % 2 else "simulated-quantum"
            _, rec = run_quantumboost(S, learner, gamma, eps, mode, **kw)
        yield _note_run(f"instrumented {seed}+{j}", rec), rng, adversarial


def _reference(rng, m, eps, j):
    kind = ("tight", "indicator", "uniform", "random")[j % 4]
    M = sample_high_density(rng, m, eps, kind)
    return M / M.sum()


def test_criterion_07_projection_entropy(criterion):
    steps = 0
    worst = -np.inf
    failures = 0
    runs = 0
    for rec, rng, _ in _instrumented(24, 700):
        if rec.algo != "quantumboost":
            continue
        runs += 1
        rep = check_projection_entropy(rec, rng, n_references=6, strict=False)
        steps += rep.n_steps
        worst = max(worst, rep.worst_vs_update - rec.zeta, rep.worst_vs_exact - rec.zeta)
        failures += not rep.passed
        if runs == 20:
            break
    criterion(7, "projection entropy lemma", runs == 20 and failures == 0,
              f"{runs} runs, {steps} projection steps, max excess over zeta {worst:.3g} (tolerance 1e-8)")


def test_criterion_08_regret(criterion):
    worst = np.inf
    ok = total = adversarial = 0
    for j, (rec, rng, adv) in enumerate(_instrumented(50, 800)):
        D = _reference(rng, rec.m, rec.epsilon, j)
        assert D.max() <= 1 / (rec.epsilon * rec.m) + 1e-12
        rep = check_regret_bound(rec, D, strict=False)
        worst = min(worst, rep.slack)
        ok += rep.passed
        total += 1
        adversarial += adv
    criterion(8, "regret bound", ok == total == 50,
              f"{ok}/{total} runs ({adversarial} adversarial), min slack {worst:.3g}")


def test_criterion_09_potential(criterion):
    worst_u = worst_p = np.inf
    iters = 0
    bad = []
    for j, (rec, rng, _) in enumerate(_instrumented(30, 900)):
        D = _reference(rng, rec.m, rec.epsilon, j)
        rep = potential_diagnostics(rec, D, strict=False)
        iters += len(rep.delta_update)
        worst_u = min(worst_u, rep.worst_update_slack)
        worst_p = min(worst_p, rep.worst_proj_slack)
        zero_off = np.all(rep.delta_proj[~rep.projected] == 0.0)
        if not (rep.passed and zero_off):
            bad.append(j)
    criterion(9, "potential decomposition", not bad,
              f"{iters} iterations over 30 runs, min update slack {worst_u:.3g}, "
              f"min projection slack {worst_p:.3g}, failing runs {bad}")


# --- implicit representation --------------------------------------------------------

def _dense_replay(rec):
    M = np.full(rec.m, rec.epsilon)
    out = [M]
    for row, loss in zip(rec.rows, rec.losses):
        N = M * np.where(loss != 0, 1 - rec.gamma, 1.0)
        M = np.minimum(1.0, row.c_tilde * N) if row.projected else N
        out.append(M)
    return out


def test_criterion_11_implicit_representation(criterion):
    S = _task(2000, 11)
    worst = 0.0
    iters = 0
    for seed, (gamma, eps, mode) in enumerate([(0.1, 0.1, "simulated-quantum"), (0.2, 0.05, "exact-pass")]):
        for entry_mode in ("cached", "recursive"):
            _, rec = run_quantumboost(S, _planted(gamma, S.m, seed), gamma, eps, mode, T=150, seed=seed,
                                      dense_trace=True, entry_mode=entry_mode)
            _note_run(f"implicit {mode} {entry_mode}", rec)
            ref = _dense_replay(rec)
            for t, M_ref in enumerate(ref):
                worst = max(worst, float(np.max(np.abs(rec.measure.evaluate(upto=t) - M_ref))))
                if t < len(rec.trace.measures):
                    worst = max(worst, float(np.max(np.abs(rec.trace.measures[t] - M_ref))))
            loss, caps = rec.measure.losses, rec.measure.caps
            idx = np.arange(S.m)
            for t in range(0, len(ref), 25):
                py = _fallback.implicit_eval(loss, caps, t, eps, 1 - gamma, idx)
                worst = max(worst, float(np.max(np.abs(py - ref[t]))))
            iters += len(ref) - 1
    criterion(11, "implicit representation", worst <= 1e-10,
              f"max entrywise difference {worst:.2e} over {iters} iterations at m=2000")


# --- estimators -----------------------------------------------------------------------

def test_criterion_12_mean_estimation(criterion):
    rng = np.random.default_rng(12)
    n, zeta, delta, eps = 1024, 0.25, 0.1, 0.1
    floor = eps / 2
    est = MeanEstimator("simulated-quantum", zeta=zeta, delta=delta, mu_floor=floor, rng=rng)
    hits = 0
    worst_c = 0.0
    for _ in range(500):
        while True:
            x = rng.random(n) ** rng.uniform(0.05, 19.0)
            mu = x.mean()
            if mu >= floor:
                break
        before = est.ledger.grover_applications
        hits += abs(est.estimate(x) - mu) <= zeta * mu
        used = est.ledger.grover_applications - before
        worst_c = max(worst_c, used * math.sqrt(floor) * zeta / math.log(1 / delta))

    floors = 0.5 * 2.0 ** -np.arange(16)
    x = rng.random(n)
    queries = []
    for f in floors:
        sweep = MeanEstimator("simulated-quantum", zeta=zeta, delta=delta, mu_floor=float(f), rng=rng)
        sweep.estimate(x)
        queries.append(sweep.ledger.grover_applications)
    slope = np.polyfit(np.log(1 / floors), np.log(queries), 1)[0]
    factor = 2.0 ** slope
    ok = hits >= 450 and worst_c <= GROVER_CONSTANT and abs(factor / math.sqrt(2) - 1) <= 0.25
    criterion(12, "mean estimation", ok,
              f"success {hits}/500, grover/(ln(1/delta)/(sqrt(floor) zeta)) <= {worst_c:.1f} "
              f"(C = {GROVER_CONSTANT:g}), per-halving query factor {factor:.3f} vs sqrt(2)")


def test_criterion_13_amplitude_estimation(criterion):
    rng = np.random.default_rng(13)
    worst = 0.0
    cases = 0
    for A in (1, 2, 4, 8, 16, 32):
        grid = GRID_PADDING * A
        for j in range(grid // 2 + 1):
            s = math.sin(math.pi * j / grid)
            worst = max(worst, abs(amplitude_estimate(s * s, A, 0.1, rng) - s))
            cases += 1
    hits = 0
    trials = 10_000
    for _ in range(trials):
        A = 1 << int(rng.integers(1, 8))
        a = float(rng.random())
        hits += abs(amplitude_estimate(a, A, 0.1, rng) - math.sqrt(a)) <= 1 / A
    ok = worst <= 1e-12 and hits / trials >= 0.9
    criterion(13, "amplitude estimation", ok,
              f"on-grid max error {worst:.1e} over {cases} points, off-grid success {hits / trials:.4f}")


def test_criterion_14_statevector(criterion):
    rng = np.random.default_rng(14)
    worst = 0.0
    cases = 0
    for logn in range(13):
        for bits in range(1, 11):
            x = rng.random(1 << logn)
            levels = 2 ** bits - 1
            expected = np.mean(np.round(x * levels) / levels)
            worst = max(worst, abs(statevector_crosscheck(x, bits) - expected))
            cases += 1
    criterion(14, "statevector cross-check", worst <= 1e-12, f"max error {worst:.1e} over {cases} cases")


def test_criterion_15_sampler(criterion):
    rng = np.random.default_rng(15)
    m = 200
    M = np.clip(rng.random(m) ** 2, 0.01, 1.0)
    floor = 0.5 * M.sum()
    draws = 100_000
    ledger = QueryLedger()
    idx = prepare_smooth_samples(M, m, draws, floor, rng, ledger)
    p = stats.chisquare(np.bincount(idx, minlength=m), M / M.sum() * draws).pvalue
    per_sample = ledger.modeled_quantum_cost / draws
    expected = math.ceil(1 / math.sqrt(floor / m))
    criterion(15, "sampler fidelity", p > 0.01 and per_sample == expected,
              f"chi-square p {p:.3f} at {draws} draws, modeled cost per sample {per_sample:g} (expected {expected})")


# --- cost trends ------------------------------------------------------------------------

def test_criterion_16_cost_trends(criterion):
    S = _task(1000, 16)
    gamma = 0.2
    epsilons = [0.02, 0.04, 0.08, 0.16, 0.32]
    per_iter = []
    for eps in epsilons:
        _, rec = run_quantumboost(S, _planted(gamma, S.m, 0), gamma, eps, seed=0)
        _note_run(f"sweep e={eps}", rec)
        cost = sum(led["modeled_quantum_cost"] for led in rec.ledgers.values())
        per_iter.append(cost / rec.T)
    slope = float(np.polyfit(np.log(epsilons), np.log(per_iter), 1)[0])

    small = _task(500, 17)
    ratios = {}
    for g in (0.05, 0.1, 0.2):
        _, kale = run_kale_smoothboost(small, _planted(g, small.m, 1), g, 0.1, seed=1)
        _, qb = run_quantumboost(small, _planted(g, small.m, 1), g, 0.1, "exact-pass", seed=1)
        _note_run(f"ratio kale g={g}", kale)
        _note_run(f"ratio qb g={g}", qb)
        ratios[g] = kale.R / qb.R / math.ceil(1 / g - 1e-9)
    ok = -0.7 <= slope <= -0.3 and all(abs(r - 1) <= 0.05 for r in ratios.values())
    criterion(16, "cost trends", ok,
              f"epsilon exponent of modeled cost per iteration {slope:.3f}, kale/quantumboost projections "
              "as a fraction of K: " + ", ".join(f"gamma={g}: {r:.3f}" for g, r in ratios.items()))


# --- weight floor (runs last so it sees every run above) ----------------------------

def test_criterion_10_weight_floor(criterion):
    for rec, _, _ in _instrumented(6, 1000):
        pass
    bad = [label for label, min_w, floor, max_entry in RUN_STATS if min_w < floor or max_entry > 1.0]
    margin = min(min_w / floor for _, min_w, floor, _ in RUN_STATS)
    criterion(10, "weight floor", not bad,
              f"{len(RUN_STATS) - len(bad)}/{len(RUN_STATS)} runs above (1-gamma)^K eps m, "
              f"min weight/floor {margin:.3f}, failing {bad[:3]}")
