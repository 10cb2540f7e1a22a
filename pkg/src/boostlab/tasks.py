"""Synthetic classification tasks on the {-1, +1} cube."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .measures import TrainingSet
from .rng import substream

KINDS = {
    "junta": "k-junta-majority",
    "k-junta-majority": "k-junta-majority",
    "literal": "literal",
    "noisy": "noisy-labels",
    "noisy-labels": "noisy-labels",
}


@dataclass(frozen=True)
class SyntheticTask:
    """``k-junta-majority``: y = MAJ(x_0..x_{k-1}), ties to -1. ``literal``: y = x_0.
    ``noisy-labels``: the junta labels with exactly floor(noise_rate m) flips."""

    kind: str = "k-junta-majority"
    n: int = 20
    k: int = 3
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown task kind {self.kind!r}", field="kind")
        object.__setattr__(self, "kind", KINDS[self.kind])
        if self.n < 1:
            raise ConfigError("n must be >= 1", field="n")
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}", field="k")
        if not 0 <= self.noise_rate < 1:
            raise ConfigError("noise_rate must be in [0, 1)", field="noise_rate")


def majority_labels(X, coords):
    s = X[:, coords].sum(axis=1)
    return np.where(s > 0, 1, -1).astype(np.int8)


def generate_task(task, m):
    if m < 1:
        raise ConfigError("m must be >= 1", field="m")
    rng = substream(task.seed, "task")
    X = rng.choice(np.array([-1.0, 1.0]), size=(m, task.n))
    if task.kind == "literal":
        y = X[:, 0].astype(np.int8)
    else:
        y = majority_labels(X, np.arange(task.k))
    if task.kind == "noisy-labels":
        flips = math.floor(task.noise_rate * m + 1e-9)
        idx = substream(task.seed, "task-noise").choice(m, size=flips, replace=False)
        y = y.copy()
        y[idx] = -y[idx]
    return TrainingSet(X, y)


_INT_KEYS = {"n", "k", "m", "seed"}
_FLOAT_KEYS = {"noise", "noise_rate"}


def parse_task_spec(spec, seed=None):
    """Parse ``kind:key=val,...`` (e.g. ``junta:k=3,n=20,m=2000``) into (task, m)."""
    kind, _, rest = spec.partition(":")
    fields = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = part.partition("=")
        key = key.strip()
        if not eq:
            raise ConfigError(f"expected key=value, got {part!r}", field="task")
        try:
            if key in _INT_KEYS:
                fields[key] = int(val)
            elif key in _FLOAT_KEYS:
                fields["noise_rate"] = float(val)
            else:
                raise ConfigError(f"unknown task key {key!r}", field="task")
        except ValueError:
            raise ConfigError(f"bad value for {key}: {val!r}", field="task") from None
    m = fields.pop("m", 1000)
    if "seed" not in fields and seed is not None:
        fields["seed"] = seed
    return SyntheticTask(kind=kind.strip() or "junta", **fields), m


def parse_task_config(text):
    """Key-value text form: lines ``kind = junta``, ``n = 20`` ... (``#`` comments)."""
    parts = []
    kind = "junta"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.replace(":", "=", 1).partition("=")
        if not sep:
            raise ConfigError(f"expected key = value, got {raw!r}", line=lineno)
        key, val = key.strip(), val.strip()
        if key == "kind":
            kind = val
        else:
            parts.append(f"{key}={val}")
    return parse_task_spec(f"{kind}:{','.join(parts)}")
