import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from boostlab import _backend
from boostlab._backend import available_backends

BACKENDS = available_backends()

unit = st.floats(0.0, 1.0, allow_nan=False)
positive = st.floats(1e-6, 1.0, allow_nan=False)


def test_compiled_backend_is_built():
    # the editable install compiles the extension; the fallback must exist regardless
    assert "python" in BACKENDS
    assert _backend.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_ksum_is_compensated(name):
    k = BACKENDS[name]
    x = np.array([1e16, 1.0, -1e16, 1.0] * 10)
    assert k.ksum(x) == 20.0
    assert k.ksum(np.zeros(0)) == 0.0


@given(arrays(np.float64, st.integers(1, 200), elements=unit), st.floats(0.0, 50.0))
def test_capped_sum_parity(x, c):
    ref = math.fsum(min(1.0, c * v) for v in x)
    for k in BACKENDS.values():
        assert k.capped_sum(x, c) == pytest.approx(ref, rel=1e-13, abs=1e-13)


@given(st.integers(1, 100).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=unit), arrays(np.float64, n, elements=positive))))
def test_kl_and_re_parity(pair):
    a, b = pair
    kl_ref = math.fsum((ai * math.log(ai / bi) if ai > 0 else 0.0) + bi - ai for ai, bi in zip(a, b))
    re_ref = math.fsum(ai * math.log(ai / bi) for ai, bi in zip(a, b) if ai > 0)
    for k in BACKENDS.values():
        assert k.kl_sum(a, b) == pytest.approx(kl_ref, rel=1e-12, abs=1e-12)
        assert k.re_sum(a, b) == pytest.approx(re_ref, rel=1e-12, abs=1e-12)


def _naive_eval(loss, caps, n, base, decay, i):
    v = base
    for s in range(n):
        if loss[s, i]:
            v *= decay
        if caps[s] > 0:
            v = min(1.0, caps[s] * v)
    return v


@given(st.integers(1, 30), st.integers(1, 40), st.integers(0, 2**31 - 1))
def test_implicit_eval_parity(events, m, seed):
    r = np.random.default_rng(seed)
    loss = (r.random((events, m)) < 0.6).astype(np.uint8)
    caps = np.where(r.random(events) < 0.3, r.uniform(1.0, 3.0, events), 0.0)
    idx = r.integers(0, m, size=min(m, 10)).astype(np.int64)
    n = int(r.integers(0, events + 1))
    expected = [_naive_eval(loss, caps, n, 0.2, 0.85, i) for i in idx]
    for k in BACKENDS.values():
        got = k.implicit_eval(loss, caps, n, 0.2, 0.85, idx)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-15)


def test_fallback_selected_by_environment(monkeypatch):
    import importlib

    monkeypatch.setenv("BOOSTLAB_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("BOOSTLAB_PURE_PYTHON")
        importlib.reload(_backend)
