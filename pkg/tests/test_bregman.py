import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boostlab.bregman import (
    DensityTarget,
    capped_density,
    exact_projection_constant,
    project_approx,
    project_exact,
    sample_high_density,
    verify_approx_definition,
)
from boostlab.errors import EstimatorFailure, Infeasible
from boostlab.measures import density, kl_measures
from boostlab.quantum import MeanEstimator, QueryLedger


def bisect_c(N, eps):
    """Independent oracle: bisection on the dense capped density, plain Python sums."""
    def dens(c):
        return math.fsum(min(1.0, c * v) for v in N) / len(N)

    if dens(1.0) >= eps:
        return 1.0
    lo, hi = 1.0, 1.0
    while dens(hi) < eps:
        lo, hi = hi, 2 * hi
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if dens(mid) < eps else (lo, mid)
    return hi


def exact_estimator(eps):
    return MeanEstimator("exact-pass", mu_floor=eps / 2)


def test_constant_uniform_example():
    N = np.full(4, 0.25)
    assert exact_projection_constant(N, 0.5) == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(project_exact(N, 0.5), 0.5)


def test_constant_capped_branch_example():
    N = np.array([0.9, 0.1, 0.1, 0.1])
    # min(1, 0.9c) + 0.3c = 2 with the first entry capped: c = 1 / 0.3
    assert exact_projection_constant(N, 0.5) == pytest.approx(10 / 3, rel=1e-14)
    np.testing.assert_allclose(project_exact(N, 0.5), [1, 1 / 3, 1 / 3, 1 / 3], atol=1e-14)


def test_already_dense_is_fixed_point():
    N = np.array([0.6, 0.7, 0.2, 0.9])
    assert exact_projection_constant(N, 0.5) == 1.0
    np.testing.assert_array_equal(project_exact(N, 0.5), N)


def test_all_capped_boundary():
    # support of exactly epsilon m: every supported entry ends at 1
    N = np.array([0.2, 0.4, 0.0, 0.0])
    assert exact_projection_constant(N, 0.5) == pytest.approx(5.0)
    np.testing.assert_allclose(project_exact(N, 0.5), [1, 1, 0, 0])


def test_infeasible_support():
    with pytest.raises(Infeasible):
        exact_projection_constant([0.5, 0, 0, 0], 0.5)
    with pytest.raises(Infeasible):
        project_approx(np.array([0.5, 0, 0, 0]), DensityTarget(0.5, 0.1), exact_estimator(0.5), 0.1)


def test_overflowing_constant_is_infeasible():
    with pytest.raises(Infeasible, match="overflow"):
        exact_projection_constant([5e-324, 0.0], 0.5)


def test_infeasible_callable_hits_doubling_cap():
    entries = lambda idx: np.where(np.asarray(idx) == 0, 0.5, 0.0)  # noqa: E731
    with pytest.raises(Infeasible, match="2\\*\\*60"):
        project_approx(entries, DensityTarget(0.5, 0.1), exact_estimator(0.5), 0.1, m=4)


# entries are 0 or at least 1e-12 so that projection constants stay finite
entry = st.one_of(st.just(0.0), st.floats(1e-12, 1.0))
instance = st.integers(2, 512).flatmap(lambda m: st.tuples(
    arrays(np.float64, m, elements=entry),
    st.floats(0.01, 0.99),
)).filter(lambda p: np.count_nonzero(p[0]) >= p[1] * p[0].size)


@given(instance)
def test_constant_matches_bisection(inst):
    N, eps = inst
    c = exact_projection_constant(N, eps)
    c_ref = bisect_c(N, eps)
    assert abs(c - c_ref) <= 1e-9 * max(1.0, c_ref)
    m = N.size
    assert abs(capped_density(N, c) - capped_density(N, c_ref)) * m <= 1e-9 * m
    if c > 1:
        assert capped_density(N, c) == pytest.approx(eps, abs=1e-12)


@given(instance, st.integers(0, 2**31 - 1))
def test_bregman_pythagorean(inst, seed):
    N, eps = inst
    P = project_exact(N, eps)
    M = sample_high_density(np.random.default_rng(seed), N.size, eps, "random", N > 0)
    assert density(M) >= eps - 1e-12
    slack = kl_measures(M, N) - kl_measures(M, P) - kl_measures(P, N)
    assert slack >= -1e-9


def test_approx_uniform_example_frozen():
    N = np.full(4, 0.25)
    est = exact_estimator(0.5)
    proj = project_approx(N, DensityTarget(0.5, 0.1), est, 0.1)
    # probes: c = 1, 2 (below), 4 (above), then bisection 3, 2.5, 2.25, 2.125
    assert proj.c_tilde == 2.125
    assert proj.steps == 7
    assert 2.0 <= proj.c_tilde <= 2.2
    assert 0.5 <= density(proj.realize()) <= 0.55
    assert proj.estimator_queries == 7 * 4


def test_approx_noop_when_dense_enough():
    N = np.array([0.55, 0.5, 0.5, 0.5])
    proj = project_approx(N, DensityTarget(0.5, 0.1), exact_estimator(0.5), 0.1)
    assert proj.c_tilde == 1.0 and proj.steps == 1


def test_approx_capped_example_def6():
    N = np.array([0.9, 0.1, 0.1, 0.1])
    eps, zeta = 0.5, 0.1
    proj = project_approx(N, DensityTarget(eps, zeta), exact_estimator(eps), 0.1)
    Mt = proj.realize(N)
    assert eps <= density(Mt) <= (1 + zeta) * eps
    rep = verify_approx_definition(Mt, project_exact(N, eps), N, zeta * eps * 4, 50, seed=3, epsilon=eps)
    assert rep.condition1
    assert rep.worst_slack <= 0.2
    assert rep.passed


def test_def6_exact_projection_is_zero_approx():
    rng = np.random.default_rng(0)
    N = rng.random(64) * 0.3
    Ms = project_exact(N, 0.4)
    rep = verify_approx_definition(Ms, Ms, N, 0.0, 30, seed=1, epsilon=0.4)
    assert rep.worst_slack <= 1e-12
    assert rep.passed


def test_def6_reports_low_density():
    N = np.full(8, 0.1)
    Ms = project_exact(N, 0.5)
    rep = verify_approx_definition(Ms / 2, Ms, N, 1.0, 5, seed=1, epsilon=0.5)
    assert not rep.condition1
    assert not rep.passed


@given(st.integers(0, 2**31 - 1))
def test_approx_window_and_alpha_property(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 300))
    zeta = float(rng.uniform(0.01, 0.45))
    eps = float(rng.uniform(0.02, 0.6))
    N = rng.random(m)
    N *= rng.uniform(0.05, 0.95) * eps / density(N) if density(N) >= eps else 1.0
    proj = project_approx(N, DensityTarget(eps, zeta), exact_estimator(eps), 0.1)
    Mt = proj.realize(N)
    Ms = project_exact(N, eps)
    assert eps - 1e-12 <= density(Mt) <= (1 + zeta) * eps + 1e-12
    # the realized constant dominates the exact one, so the excess weight bounds the slack
    assert proj.c_tilde >= exact_projection_constant(N, eps) - 1e-12
    rep = verify_approx_definition(Mt, Ms, N, zeta * eps * m, 8, seed, eps)
    assert rep.worst_slack <= zeta * eps * m + 1e-9


def test_approx_simulated_quantum_mostly_in_window():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(40):
        N = rng.random(256) * 0.2
        est = MeanEstimator("simulated-quantum", mu_floor=0.2, rng=rng)
        proj = project_approx(N, DensityTarget(0.4, 0.1), est, 0.1)
        hits += 0.4 <= density(proj.realize(N)) <= 0.44
    assert hits >= 36


class _Liar:
    """Estimator reporting 0 for the first two probes and ``above`` ever after."""

    def __init__(self, above):
        self.ledger = QueryLedger()
        self.above = above
        self.calls = 0

    def estimate(self, values, n=None, *, zeta=None, delta=None):
        self.calls += 1
        self.ledger.oracle_queries += n
        return 0.0 if self.calls <= 2 else self.above


def test_estimator_failure_reports_step():
    eps, zeta = 0.5, 0.1
    target = DensityTarget(eps, zeta)
    # c = 1, 2 look too sparse, c = 4 too dense, and bisection never lands
    liar = _Liar(target.window[1] * 1.01)
    with pytest.raises(EstimatorFailure) as info:
        project_approx(np.full(4, 0.25), target, liar, 0.1)
    n_steps = math.ceil(math.log2(4 * 8 / (eps * zeta)))
    assert info.value.step == 3 + n_steps


def test_density_target_validation():
    with pytest.raises(ValueError):
        DensityTarget(0.0, 0.1)
    with pytest.raises(ValueError):
        DensityTarget(0.5, 0.6)
    t = DensityTarget(0.2, 0.1)
    assert t.window == pytest.approx((0.2 * 1.025, 0.2 * 1.075))
    assert t.alpha(100) == pytest.approx(2.0)


@pytest.mark.parametrize("kind", ["random", "tight", "uniform", "indicator"])
def test_high_density_samples_are_members(kind):
    rng = np.random.default_rng(2)
    support = rng.random(100) < 0.7
    for _ in range(10):
        M = sample_high_density(rng, 100, 0.3, kind, support)
        assert M.max() <= 1.0 and M.min() >= 0.0
        assert density(M) >= 0.3 - 1e-12
        assert not M[~support].any()
        if kind in ("tight", "uniform"):
            assert density(M) == pytest.approx(0.3, abs=1e-12)
