"""Potential-function and regret diagnostics over recorded runs.

The potential is Psi^t(D) = RE(D || D^t) for a fixed smooth reference D. Each
iteration changes it in two steps: the multiplicative update and the
(possibly approximate) projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import ksum
from .bregman import project_exact, sample_high_density
from .errors import BoundViolation
from .measures import relative_entropy

POTENTIAL_TOL = 1e-8
REGRET_TOL = 1e-6


def _dist(M):
    M = np.asarray(M, dtype=np.float64)
    return M / ksum(M)


def _require_trace(record):
    if record.trace is None:
        raise ValueError("diagnostics need a run recorded with dense_trace=True")
    return record.trace


def uniform_reference(m):
    return np.full(m, 1.0 / m)


def misclassified_reference(S, hypothesis):
    """Uniform distribution over the points the hypothesis gets wrong (None if there are none)."""
    wrong = hypothesis.predict(S.X) != S.y
    if not wrong.any():
        return None
    return wrong / wrong.sum()


@dataclass
class PotentialReport:
    delta_update: np.ndarray
    bound_update: np.ndarray
    delta_proj: np.ndarray
    bound_proj: float
    projected: np.ndarray
    psi1: float
    violations: list = field(default_factory=list)

    @property
    def worst_update_slack(self):
        return float(np.min(self.bound_update - self.delta_update))

    @property
    def worst_proj_slack(self):
        return float(np.min(self.bound_proj - self.delta_proj))

    @property
    def passed(self):
        return not self.violations


def potential_diagnostics(record, D_ref, strict=True, tol=POTENTIAL_TOL):
    """Check the per-iteration update and projection bounds on the potential.

    Update: Psi change <= gamma (<D,l>(1 + gamma) - <D^t,l>). Projection:
    Psi change <= zeta at projection steps and exactly 0 elsewhere.
    """
    trace = _require_trace(record)
    D = np.asarray(D_ref, dtype=np.float64)
    g = record.gamma
    T = len(trace.measures)
    du = np.empty(T)
    bu = np.empty(T)
    dp = np.empty(T)
    projected = np.array([r.projected for r in record.rows[:T]], dtype=bool)
    violations = []
    psi1 = relative_entropy(D, _dist(trace.measures[0]))
    for i in range(T):
        Dt = _dist(trace.measures[i])
        Dhat = _dist(trace.updated[i])
        loss = record.losses[i]
        re_t = relative_entropy(D, Dt)
        re_hat = relative_entropy(D, Dhat)
        du[i] = re_hat - re_t
        bu[i] = g * (float(D @ loss) * (1 + g) - float(Dt @ loss))
        if projected[i]:
            dp[i] = relative_entropy(D, _dist(trace.after[i])) - re_hat
        else:
            dp[i] = 0.0 if np.array_equal(trace.after[i], trace.updated[i]) else (
                relative_entropy(D, _dist(trace.after[i])) - re_hat)
        t = i + 1
        if bu[i] - du[i] < -tol:
            violations.append((t, "update", float(bu[i] - du[i])))
        if projected[i] and record.zeta - dp[i] < -tol:
            violations.append((t, "projection", float(record.zeta - dp[i])))
        if not projected[i] and dp[i] != 0.0:
            violations.append((t, "non-projection", float(-abs(dp[i]))))
    report = PotentialReport(du, bu, dp, record.zeta, projected, psi1, violations)
    if strict and violations:
        t, kind, slack = violations[0]
        raise BoundViolation(f"{kind} potential bound violated at iteration {t} (slack {slack:.3g})", iteration=t)
    return report


@dataclass
class RegretReport:
    learner_loss: float
    reference_loss: float
    projection_term: float
    entropy_term: float
    R: int
    gamma: float

    @property
    def rhs(self):
        g = self.gamma
        return (1 + g) * self.reference_loss + self.projection_term + self.entropy_term

    @property
    def slack(self):
        return self.rhs - self.learner_loss

    @property
    def passed(self):
        return self.slack >= -REGRET_TOL


def check_regret_bound(record, D_ref, strict=True):
    """sum_t <D^t,l^t> <= (1+gamma) sum_t <D,l^t> + R zeta / gamma + RE(D || D^1) / gamma."""
    D = np.asarray(D_ref, dtype=np.float64)
    g = record.gamma
    learner = math.fsum(r.agreement for r in record.rows)
    reference = math.fsum(record.losses.astype(np.float64) @ D)
    R = record.R
    re1 = relative_entropy(D, uniform_reference(record.m))
    report = RegretReport(learner, reference, R * record.zeta / g, re1 / g, R, g)
    if strict and not report.passed:
        raise BoundViolation(f"regret bound violated by {-report.slack:.3g}", iteration=len(record.rows))
    return report


@dataclass
class ProjectionEntropyReport:
    n_steps: int
    n_references: int
    worst_vs_update: float
    worst_vs_exact: float
    zeta: float
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def reference_measures(rng, m, epsilon, count):
    """Measures of weight exactly epsilon m: random tight ones and uniform ones on random sets."""
    out = []
    k_min = math.ceil(epsilon * m - 1e-9)
    for j in range(count):
        if j % 2 == 0:
            out.append(sample_high_density(rng, m, epsilon, "tight"))
        else:
            k = int(rng.integers(k_min, m + 1))
            M = np.zeros(m)
            M[rng.choice(m, size=k, replace=False)] = epsilon * m / k
            out.append(M)
    return out


def check_projection_entropy(record, rng, n_references=8, strict=True, tol=POTENTIAL_TOL):
    """At every projection step compare RE(D_E || D^{t+1}) to RE(D_E || D-hat) and RE(D_E || D*).

    Each must not exceed the other by more than zeta, for reference measures
    M_E of weight exactly epsilon m.
    """
    trace = _require_trace(record)
    eps, zeta = record.epsilon, record.zeta
    refs = [_dist(M) for M in reference_measures(rng, record.m, eps, n_references)]
    worst_u = worst_x = -np.inf
    steps = 0
    violations = []
    for i, row in enumerate(record.rows[: len(trace.measures)]):
        if not row.projected:
            continue
        steps += 1
        N = trace.updated[i]
        D_next = _dist(trace.after[i])
        D_hat = _dist(N)
        D_star = _dist(project_exact(N, eps))
        for DE in refs:
            base = relative_entropy(DE, D_next)
            gu = base - relative_entropy(DE, D_hat)
            gx = base - relative_entropy(DE, D_star)
            worst_u = max(worst_u, gu)
            worst_x = max(worst_x, gx)
            if gu > zeta + tol or gx > zeta + tol:
                violations.append((row.t, float(gu), float(gx)))
    report = ProjectionEntropyReport(steps, len(refs), float(worst_u), float(worst_x), zeta, violations)
    if strict and violations:
        t = violations[0][0]
        raise BoundViolation(f"projection entropy bound violated at iteration {t}", iteration=t)
    return report


def weight_floor_check(record, tol=1e-9):
    """(min weight, required floor, max entry) over a run's recorded iterations."""
    K = math.ceil(1 / record.gamma - 1e-9)
    floor = (1 - record.gamma) ** K * record.epsilon * record.m - tol * record.m
    min_w = min(r.weight for r in record.rows)
    max_entry = max(r.max_entry for r in record.rows)
    return min_w, floor, max_entry
