"""Run configuration: key-value files merged with command-line flags (flags win)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError
from .quantum import MODES
from .rng import default_seed

ALGOS = ("kale", "quantumboost")
LEARNERS = ("planted", "stump")
ON_VIOLATION = ("abort", "warn", "ignore")


@dataclass
class RunConfig:
    algo: str = "quantumboost"
    gamma: float | None = None
    epsilon: float | None = None
    delta: float = 0.1
    estimator: str = "simulated-quantum"
    learner: str = "planted"
    samples: int = 64
    task: str = "junta:k=3,n=20,m=2000"
    data: str | None = None
    T: int | None = None
    K: int | None = None
    seed: int = dataclasses.field(default_factory=default_seed)
    dense_trace: bool = False
    on_violation: str = "abort"
    out: str = "boostlab_run"

    def comparable_key(self):
        """Everything that must agree between members of a comparison."""
        skip = {"algo", "estimator", "out"}
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name not in skip}


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _open(lo, hi):
    def check(v):
        if not lo < v < hi:
            raise ValueError(f"must be in ({lo}, {hi}), got {v}")
    return check


def _choice(options):
    def check(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {v!r}")
    return check


def _positive(v):
    if v < 1:
        raise ValueError(f"must be >= 1, got {v}")


def _nonneg(v):
    if v < 0:
        raise ValueError(f"must be >= 0, got {v}")


FIELDS = {
    "algo": (str, _choice(ALGOS)),
    "gamma": (float, _open(0, 0.5)),
    "epsilon": (float, _open(0, 1)),
    "delta": (float, _open(0, 1)),
    "estimator": (str, _choice(MODES)),
    "learner": (str, _choice(LEARNERS)),
    "samples": (int, _positive),
    "task": (str, None),
    "data": (str, None),
    "T": (int, _positive),
    "K": (int, _positive),
    "seed": (int, _nonneg),
    "dense_trace": (_bool, None),
    "on_violation": (str, _choice(ON_VIOLATION)),
    "out": (str, None),
}
REQUIRED = ("gamma", "epsilon")


def _convert(key, raw, line=None):
    conv, check = FIELDS[key]
    try:
        value = conv(raw) if isinstance(raw, str) else raw
        if check is not None:
            check(value)
    except ValueError as exc:
        raise ConfigError(str(exc), field=key, line=line) from None
    return value


def parse_config_text(text):
    """Parse ``key = value`` lines into {key: (value, line)}; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", line=lineno)
        if key not in FIELDS:
            raise ConfigError("unknown key", field=key, line=lineno)
        out[key] = (_convert(key, val.strip(), lineno), lineno)
    return out


def read_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text)


def build_config(file_values=None, overrides=None):
    """Merge file values with flag overrides (None means unset) and validate."""
    values = {k: v for k, (v, _) in (file_values or {}).items()}
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = _convert(key, val)
    for key in REQUIRED:
        if values.get(key) is None:
            raise ConfigError("required value is missing", field=key)
    return RunConfig(**values)
