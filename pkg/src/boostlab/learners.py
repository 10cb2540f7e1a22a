"""Weak learners and the hypotheses they return.

Learners are callables taking a ``LearnerInput`` and returning a hypothesis;
``sample_count`` tells the engine how many examples to draw from D^t per call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_SAMPLES = 64


class StumpHypothesis:
    """Single-coordinate threshold rule: ``polarity`` if x[coord] > threshold else ``-polarity``."""

    def __init__(self, coord, threshold, polarity):
        self.coord = int(coord)
        self.threshold = float(threshold)
        self.polarity = int(polarity)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.where(X[:, self.coord] > self.threshold, self.polarity, -self.polarity).astype(np.int8)

    def to_json(self):
        return {"kind": "stump", "coord": self.coord, "threshold": self.threshold,
                "polarity": self.polarity}

    def __repr__(self):
        return f"StumpHypothesis(coord={self.coord}, threshold={self.threshold}, polarity={self.polarity})"


class TableHypothesis:
    """Predictions given per training index; only defined on its own training matrix."""

    def __init__(self, preds, train_X):
        self.preds = np.asarray(preds, dtype=np.int8)
        self._X = train_X

    def predict(self, X):
        if X is self._X or (np.shape(X) == np.shape(self._X) and np.array_equal(X, self._X)):
            return self.preds
        raise ValueError("table hypothesis is only defined on the training set it was built for")

    def predict_index(self, idx):
        return self.preds[idx]

    def to_json(self):
        return {"kind": "table", "agree_count": int(np.count_nonzero(self.preds == 1))}


@dataclass
class LearnerInput:
    X: np.ndarray
    y: np.ndarray
    probs: np.ndarray
    samples: np.ndarray


def planted_weak_learn(probs, labels, gamma, tie_order):
    """Agree with the labels on the shortest ``tie_order`` prefix of weight >= 1/2 + gamma.

    Disagrees everywhere else, so the achieved agreement exceeds 1/2 + gamma by
    less than the weight of one point.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    cum = np.cumsum(probs[tie_order])
    k = int(np.searchsorted(cum, 0.5 + gamma - 1e-12)) + 1
    k = min(k, labels.size)
    preds = -labels.astype(np.int8)
    chosen = tie_order[:k]
    preds[chosen] = labels[chosen]
    return preds


@dataclass
class PlantedLearner:
    """Analysis instrument delivering exactly the promised weak-learning edge.

    Reads the full distribution D^t; the drawn samples are ignored.
    """

    gamma: float
    tie_order: np.ndarray
    sample_count: int = DEFAULT_SAMPLES
    reads_distribution: bool = field(default=True, init=False)

    @classmethod
    def seeded(cls, gamma, m, rng, sample_count=DEFAULT_SAMPLES):
        return cls(gamma, rng.permutation(m), sample_count)

    def __call__(self, inp):
        preds = planted_weak_learn(inp.probs, inp.y, self.gamma, self.tie_order)
        return TableHypothesis(preds, inp.X)


def stump_weak_learn(Xs, ys):
    """Best single-coordinate stump by empirical agreement on the sample (first wins ties)."""
    Xs = np.atleast_2d(np.asarray(Xs, dtype=np.float64))
    ys = np.asarray(ys)
    w = Xs.shape[0]
    best = (-1, 0, 0.0, 1)
    for j in range(Xs.shape[1]):
        order = np.argsort(Xs[:, j], kind="stable")
        v = Xs[order, j]
        yj = ys[order]
        # split k: first k predicted -p, the rest +p
        neg_before = np.concatenate(([0], np.cumsum(yj == -1)))
        pos_after = np.concatenate((np.cumsum((yj == 1)[::-1])[::-1], [0]))
        agree_pos = neg_before + pos_after
        agree_neg = w - agree_pos
        valid = np.ones(w + 1, dtype=bool)
        valid[1:w] = v[1:] > v[:-1]
        for p, agree in ((1, agree_pos), (-1, agree_neg)):
            scores = np.where(valid, agree, -1)
            k = int(np.argmax(scores))
            if scores[k] > best[0]:
                if k == 0:
                    thr = v[0] - 1.0
                elif k == w:
                    thr = v[-1]
                else:
                    thr = 0.5 * (v[k - 1] + v[k])
                best = (int(scores[k]), j, thr, p)
    _, j, thr, p = best
    return StumpHypothesis(j, thr, p)


@dataclass
class StumpLearner:
    sample_count: int = DEFAULT_SAMPLES
    reads_distribution: bool = field(default=False, init=False)

    def __call__(self, inp):
        return stump_weak_learn(inp.X[inp.samples], inp.y[inp.samples])


class RandomLossLearner:
    """Adversary emitting uniformly random predictions; ignores the distribution."""

    reads_distribution = False
    sample_count = 0

    def __init__(self, rng, bias=0.5):
        self.rng = rng
        self.bias = bias

    def __call__(self, inp):
        agree = self.rng.random(inp.y.size) < self.bias
        return TableHypothesis(np.where(agree, inp.y, -inp.y), inp.X)
