"""Smooth boosting loops: eager exact projection (baseline) and lazy approximate projection.

The lazy booster never stores M^t as its state. It keeps the event schedule
(hypothesis, its loss bits on the training set, and a projection constant at
every K-th step) and evaluates entries by replaying the schedule. A dense copy
is maintained incrementally as a cache for the learner and for diagnostics.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import implicit_eval, ksum
from .bregman import DensityTarget, ImplicitProjection, exact_projection_constant, project_approx
from .errors import EstimatorFailure, WeakLearnerContractViolation
from .fsutil import atomic_write_json, atomic_write_text
from .learners import LearnerInput
from .measures import relative_entropy
from .quantum import MeanEstimator, QueryLedger, prepare_smooth_samples
from .rng import substream

CONTRACT_TOL = 1e-9
DENSE_TRACE_MAX_M = 100_000


def theorem_iterations(epsilon, gamma):
    """T = floor(4 ln(1/epsilon) / gamma^2) + 1."""
    return math.floor(4 * math.log(1 / epsilon) / gamma ** 2) + 1


def projection_interval(gamma):
    return math.ceil(1 / gamma - 1e-9)


def loss_vector(h, X, y):
    """1 where the hypothesis is correct (those points get down-weighted)."""
    return (h.predict(X) == y).astype(np.uint8)


class ImplicitMeasure:
    """M^t as a replayable schedule of updates and capped rescalings.

    Entry at x: start at ``base_value``; per event multiply by (1 - gamma)
    when the event's hypothesis is correct on x, and on projection events
    replace v by min(1, c_tilde v).
    """

    def __init__(self, m, base_value, gamma, capacity=64):
        self.m = int(m)
        self.base_value = float(base_value)
        self.gamma = float(gamma)
        self.decay = 1.0 - self.gamma
        self._loss = np.zeros((max(1, capacity), self.m), dtype=np.uint8)
        self._caps = np.zeros(max(1, capacity))
        self.hypotheses = []
        self._cache = np.full(self.m, self.base_value)
        self._cache_upto = 0

    @property
    def n_events(self):
        return len(self.hypotheses)

    @property
    def losses(self):
        return self._loss[: self.n_events]

    @property
    def caps(self):
        """Projection constant per event, 0 where the event only updates."""
        return self._caps[: self.n_events]

    def append(self, hypothesis, loss, c_tilde=None):
        n = self.n_events
        if n == self._loss.shape[0]:
            self._loss = np.concatenate([self._loss, np.zeros_like(self._loss)])
            self._caps = np.concatenate([self._caps, np.zeros_like(self._caps)])
        self._loss[n] = loss
        self._caps[n] = 0.0 if c_tilde is None else float(c_tilde)
        self.hypotheses.append(hypothesis)

    def evaluate(self, idx=None, upto=None, pending_loss=None):
        """Replay the first ``upto`` events (default all) at the given indices.

        ``pending_loss`` applies one more un-projected update on top, giving
        entries of N^{t+1} before its projection constant is known.
        """
        idx = np.arange(self.m) if idx is None else np.asarray(idx, dtype=np.int64)
        upto = self.n_events if upto is None else upto
        out = implicit_eval(self._loss, self._caps, upto, self.base_value, self.decay, idx)
        if pending_loss is not None:
            out = out * np.where(np.asarray(pending_loss)[idx] != 0, self.decay, 1.0)
        return out

    def entry(self, i, x=None, y=None):
        """One entry via hypothesis evaluation (O(t) calls to ``predict``) or stored loss bits."""
        v = self.base_value
        for s, h in enumerate(self.hypotheses):
            correct = (h.predict(x)[0] == y) if x is not None else self._loss[s, i]
            if correct:
                v *= self.decay
            c = self._caps[s]
            if c > 0:
                v = min(1.0, c * v)
        return v

    def dense(self):
        """Materialized M^t, advanced incrementally from the last call."""
        for s in range(self._cache_upto, self.n_events):
            self._cache[self._loss[s] != 0] *= self.decay
            if self._caps[s] > 0:
                np.minimum(1.0, self._caps[s] * self._cache, out=self._cache)
        self._cache_upto = self.n_events
        return self._cache

    def schedule(self):
        return [
            {"event": "update_and_project" if c > 0 else "update", "c_tilde": float(c) if c > 0 else None}
            for c in self.caps
        ]


def multiplicative_update(M, loss, gamma, hypothesis=None):
    """N = M (1 - gamma)^loss. Dense input returns a new vector; implicit input gets an event."""
    if isinstance(M, ImplicitMeasure):
        M.append(hypothesis, loss)
        return M
    M = np.asarray(M, dtype=np.float64)
    return M * np.where(np.asarray(loss) != 0, 1.0 - gamma, 1.0)


def evaluate_majority(hypotheses, x):
    """+1 iff strictly more than half of the votes are +1 (ties go to -1)."""
    if not hypotheses:
        raise ValueError("need at least one hypothesis")
    x = np.atleast_2d(x)
    votes = sum(int(h.predict(x)[0]) for h in hypotheses)
    return 1 if votes > 0 else -1


class MajorityVote:
    def __init__(self, hypotheses):
        self.hypotheses = list(hypotheses)

    def predict(self, X):
        votes = np.zeros(np.atleast_2d(X).shape[0], dtype=np.int64)
        for h in self.hypotheses:
            votes += h.predict(X)
        return np.where(votes > 0, 1, -1).astype(np.int8)


@dataclass
class IterationRow:
    t: int
    weight: float
    empirical_error: float
    agreement: float
    advantage: float
    max_prob: float
    max_entry: float
    projected: bool
    c_tilde: float | None
    delta_psi_update: float | None
    delta_psi_proj: float | None
    ledgers: dict

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class DenseTrace:
    measures: list = field(default_factory=list)
    updated: list = field(default_factory=list)
    after: list = field(default_factory=list)


@dataclass
class RunRecord:
    algo: str
    gamma: float
    epsilon: float
    zeta: float
    K: int
    T: int
    m: int
    rows: list = field(default_factory=list)
    hypotheses: list = field(default_factory=list)
    losses: np.ndarray | None = None
    projections: list = field(default_factory=list)
    trace: DenseTrace | None = None
    measure: ImplicitMeasure | None = None
    contract_violations: int = 0
    final_error: float | None = None
    ledgers: dict = field(default_factory=dict)

    @property
    def R(self):
        return sum(1 for r in self.rows if r.projected)

    @property
    def final_hypothesis(self):
        return MajorityVote(self.hypotheses)

    def summary(self):
        return {
            "algo": self.algo,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "zeta": self.zeta,
            "K": self.K,
            "T": self.T,
            "R": self.R,
            "m": self.m,
            "iterations_run": len(self.rows),
            "final_error": self.final_error,
            "max_smoothness": max((r.max_prob for r in self.rows), default=None),
            "smoothness_bound": 1.0 / (self.epsilon * self.m),
            "min_weight": min((r.weight for r in self.rows), default=None),
            "contract_violations": self.contract_violations,
            "ledgers": self.ledgers,
        }

    def jsonl(self):
        return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in self.rows)

    def write(self, log_path, summary_path):
        atomic_write_text(log_path, self.jsonl())
        atomic_write_json(summary_path, self.summary())


class _Loop:
    """State shared by both boosting loops: learner calls, votes, rows."""

    def __init__(self, S, learner, gamma, epsilon, record, seed, on_violation, reference, dense_trace):
        if not 0 < gamma < 0.5:
            raise ValueError(f"gamma must be in (0, 1/2), got {gamma}")
        if not 0 < epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
        if on_violation not in ("abort", "warn", "ignore"):
            raise ValueError("on_violation must be abort, warn or ignore")
        if dense_trace and S.m > DENSE_TRACE_MAX_M:
            raise ValueError(f"dense trace is limited to m <= {DENSE_TRACE_MAX_M}")
        self.S = S
        self.learner = learner
        self.gamma = gamma
        self.epsilon = epsilon
        self.record = record
        self.on_violation = on_violation
        self.reference = None if reference is None else np.asarray(reference, dtype=np.float64)
        self.sampler_rng = substream(seed, "sampler")
        self.sampling = QueryLedger()
        self.votes = np.zeros(S.m, dtype=np.int64)
        self.losses = np.zeros((record.T, S.m), dtype=np.uint8)
        if dense_trace:
            record.trace = DenseTrace()

    def weak_hypothesis(self, t, Mt, sampler_entries, weight_floor, quantum):
        w = ksum(Mt)
        D = Mt / w
        samples = prepare_smooth_samples(sampler_entries, self.S.m, self.learner.sample_count,
                                         weight_floor, self.sampler_rng, self.sampling, quantum)
        h = self.learner(LearnerInput(self.S.X, self.S.y, D, samples))
        preds = h.predict(self.S.X)
        loss = (preds == self.S.y).astype(np.uint8)
        agreement = float(D @ loss)
        if agreement < 0.5 + self.gamma - CONTRACT_TOL:
            self.record.contract_violations += 1
            msg = f"iteration {t}: weak hypothesis agreement {agreement:.6f} < 1/2 + gamma = {0.5 + self.gamma:.6f}"
            if self.on_violation == "abort":
                self.finish()
                raise WeakLearnerContractViolation(msg, iteration=t, record=self.record)
            if self.on_violation == "warn":
                warnings.warn(msg, RuntimeWarning, stacklevel=3)
        self.votes += preds
        self.losses[t - 1] = loss
        self.record.hypotheses.append(h)
        return h, loss, D, w, agreement

    def error(self):
        return float(np.mean(np.where(self.votes > 0, 1, -1) != self.S.y))

    def add_row(self, t, Mt, D, w, agreement, loss, N, M_next, c_tilde, projected, ledgers):
        dpu = dpp = None
        if self.reference is not None:
            Dref = self.reference
            Dhat = N / ksum(N)
            Dnext = M_next / ksum(M_next)
            re_t = relative_entropy(Dref, D)
            re_hat = relative_entropy(Dref, Dhat)
            dpu = re_hat - re_t
            dpp = relative_entropy(Dref, Dnext) - re_hat if projected else 0.0
        if self.record.trace is not None:
            self.record.trace.measures.append(Mt.copy())
            self.record.trace.updated.append(N.copy())
            self.record.trace.after.append(M_next.copy())
        self.record.rows.append(IterationRow(
            t=t, weight=w, empirical_error=self.error(), agreement=agreement,
            advantage=agreement - 0.5, max_prob=float(D.max()), max_entry=float(Mt.max()),
            projected=projected, c_tilde=c_tilde, delta_psi_update=dpu, delta_psi_proj=dpp,
            ledgers=ledgers,
        ))

    def finish(self):
        self.record.final_error = self.error() if self.record.rows else None
        self.record.losses = self.losses[: len(self.record.rows)]


def run_kale_smoothboost(S, learner, gamma, epsilon, T=None, *, seed=0, dense_trace=False,
                         reference=None, on_violation="abort"):
    """Eager baseline: dense measures, exact projection after every update."""
    T = theorem_iterations(epsilon, gamma) if T is None else int(T)
    m = S.m
    record = RunRecord("kale", gamma, epsilon, 0.0, 1, T, m)
    loop = _Loop(S, learner, gamma, epsilon, record, seed, on_violation, reference, dense_trace)
    projection = QueryLedger()
    M = np.full(m, epsilon)
    for t in range(1, T + 1):
        _, loss, D, w, agreement = loop.weak_hypothesis(t, M, M, epsilon * m, quantum=False)
        N = multiplicative_update(M, loss, gamma)
        c = exact_projection_constant(N, epsilon)
        projection.oracle_queries += m
        M_next = np.minimum(1.0, c * N)
        ledgers = {"sampling": loop.sampling.snapshot(), "projection": projection.snapshot()}
        record.projections.append({"t": t, "c": c})
        loop.add_row(t, M, D, w, agreement, loss, N, M_next, c, True, ledgers)
        M = M_next
    loop.finish()
    record.ledgers = {"sampling": loop.sampling.snapshot(), "projection": projection.snapshot()}
    return record.final_hypothesis, record


def _make_estimator(estimator, epsilon, delta, seed):
    if isinstance(estimator, MeanEstimator):
        return estimator
    return MeanEstimator(mode=estimator, zeta=0.25, delta=delta, mu_floor=epsilon / 2,
                         rng=substream(seed, "estimator"))


def run_quantumboost(S, learner, gamma, epsilon, estimator="simulated-quantum", delta=0.1, T=None, *,
                     seed=0, K=None, exact_projection=False, dense_trace=False, reference=None,
                     on_violation="abort", entry_mode="cached"):
    """Lazy boosting: multiplicative update every iteration, approximate projection every K-th.

    Projections happen when t % K == 0 and once more at t == T if T is not a
    multiple of K, so exactly ceil(T / K) are made. Each runs at precision
    zeta = gamma / 4 with failure budget delta / ceil(T / K).

    ``entry_mode="recursive"`` serves sampler and projection queries by
    replaying the schedule per queried index instead of from the dense cache.
    """
    T = theorem_iterations(epsilon, gamma) if T is None else int(T)
    K = projection_interval(gamma) if K is None else int(K)
    if entry_mode not in ("cached", "recursive"):
        raise ValueError("entry_mode must be cached or recursive")
    m = S.m
    zeta = gamma / 4
    R = math.ceil(T / K)
    est = _make_estimator(estimator, epsilon, delta, seed)
    target = DensityTarget(epsilon, zeta)
    record = RunRecord("quantumboost", gamma, epsilon, zeta, K, T, m)
    loop = _Loop(S, learner, gamma, epsilon, record, seed, on_violation, reference, dense_trace)
    M = ImplicitMeasure(m, epsilon, gamma, capacity=T)
    record.measure = M
    weight_floor = epsilon * m * (1 - gamma) ** K
    for t in range(1, T + 1):
        Mt = M.dense().copy()
        entries = Mt if entry_mode == "cached" else M.evaluate
        h, loss, D, w, agreement = loop.weak_hypothesis(t, Mt, entries, weight_floor, quantum=True)
        N = Mt * np.where(loss != 0, M.decay, 1.0)
        projected = t % K == 0 or t == T
        c_tilde = None
        if projected:
            if exact_projection:
                c_tilde = exact_projection_constant(N, epsilon)
                record.projections.append({"t": t, "c_tilde": c_tilde})
            else:
                source = N if entry_mode == "cached" else (lambda idx, _l=loss: M.evaluate(idx, pending_loss=_l))
                try:
                    proj = project_approx(source, target, est, delta / R, m=m)
                except EstimatorFailure as exc:
                    exc.iteration = t
                    loop.finish()
                    raise
                c_tilde = proj.c_tilde
                record.projections.append({"t": t, **proj.to_json()})
        M.append(h, loss, c_tilde)
        M_next = M.dense()
        ledgers = {"sampling": loop.sampling.snapshot(), "estimator": est.ledger.snapshot()}
        loop.add_row(t, Mt, D, w, agreement, loss, N, M_next, c_tilde, projected, ledgers)
    loop.finish()
    record.ledgers = {"sampling": loop.sampling.snapshot(), "estimator": est.ledger.snapshot()}
    return record.final_hypothesis, record
