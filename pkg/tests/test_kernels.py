"""Numeric kernels: loop oracles and numba/numpy parity."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqiforecast import kernels
from aqiforecast._accel import backend

needs_numba = pytest.mark.skipif(not kernels.NUMBA_KERNELS,
                                 reason="numba unavailable or disabled")

COEFS = st.tuples(*[st.floats(-0.9, 0.9) for _ in range(4)], st.floats(-3, 3))


def css_oracle(w, dx, phi, theta, sphi, stheta, beta, s):
    eps = []
    for t in range(len(w)):
        def at(seq, k):
            return seq[k] if k >= 0 else 0.0
        eps.append(w[t] - phi * at(w, t - 1) - sphi * at(w, t - s) - beta * at(dx, t - 1)
                   - theta * at(eps, t - 1) - stheta * at(eps, t - s))
    return np.array(eps)


def forecast_oracle(y, w, eps, dx, phi, theta, sphi, stheta, beta, s, o, h):
    ww = list(w[: o + 1])
    ee = list(eps[: o + 1])
    for j in range(o + 1, o + h + 1):
        def at(seq, k):
            return seq[k] if k >= 0 else 0.0
        ww.append(phi * at(ww, j - 1) + sphi * at(ww, j - s) + beta * dx[j - 1]
                  + theta * at(ee, j - 1) + stheta * at(ee, j - s))
        ee.append(0.0)
    return y[o] + sum(ww[o + 1:])


def series(rng, n=60):
    w = rng.normal(size=n)
    dx = rng.normal(size=n)
    return w, dx


@pytest.mark.parametrize("s", [2, 7])
def test_css_matches_loop_oracle(rng, s):
    w, dx = series(rng)
    coefs = (0.5, -0.3, 0.2, 0.4, 1.5)
    np.testing.assert_allclose(kernels.css_residuals_numpy(w, dx, *coefs, s),
                               css_oracle(w, dx, *coefs, s), rtol=1e-12, atol=1e-12)


@settings(max_examples=40)
@given(COEFS, st.integers(0, 2**31 - 1))
def test_css_property(coefs, seed):
    rng = np.random.default_rng(seed)
    w, dx = series(rng, 30)
    np.testing.assert_allclose(kernels.css_residuals(w, dx, *coefs, 7),
                               css_oracle(w, dx, *coefs, 7), rtol=1e-9, atol=1e-9)


def test_css_short_series(rng):
    w, dx = series(rng, 3)
    np.testing.assert_allclose(kernels.css_residuals_numpy(w, dx, 0.1, 0.2, 0.3, 0.4, 0.5, 7),
                               css_oracle(w, dx, 0.1, 0.2, 0.3, 0.4, 0.5, 7), atol=1e-14)


def test_css_zero_coefficients_is_identity(rng):
    w, dx = series(rng)
    np.testing.assert_array_equal(kernels.css_residuals_numpy(w, dx, 0, 0, 0, 0, 0, 7), w)


def _forecast_case(rng, n=50, s=7):
    w, dx = series(rng, n)
    coefs = (0.4, 0.3, -0.2, 0.25, 0.8)
    eps = css_oracle(w, dx, *coefs, s)
    y = 40.0 + np.cumsum(w)
    return y, w, eps, dx, coefs


def test_forecast_matches_loop_oracle(rng):
    y, w, eps, dx, coefs = _forecast_case(rng)
    origins = np.array([0, 3, 10, 20, 30, 40])
    horizons = np.array([1, 5, 1, 9, 14, 7])
    got = kernels.forecast_paths_numpy(y, w, eps, dx, *coefs, 7, origins, horizons)
    want = [forecast_oracle(y, w, eps, dx, *coefs, 7, o, h) for o, h in zip(origins, horizons)]
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_one_step_forecast_is_observation_minus_shock(rng):
    y, w, eps, dx, coefs = _forecast_case(rng)
    origins = np.arange(0, 48)
    got = kernels.forecast_paths(y, w, eps, dx, *coefs, 7, origins, np.ones_like(origins))
    np.testing.assert_allclose(got, y[origins + 1] - eps[origins + 1], rtol=1e-12)


# --- parity between backends --------------------------------------------

def _arguments(name, rng):
    if name == "css_residuals":
        w, dx = series(rng, 200)
        return (w, dx, 0.5, -0.3, 0.2, 0.4, 1.5, 7)
    if name == "forecast_paths":
        y, w, eps, dx, coefs = _forecast_case(rng, 80)
        return (y, w, eps, dx, *coefs, 7, np.arange(0, 60), np.full(60, 9))
    if name == "lstm_gates_forward":
        return (rng.normal(size=(16, 4 * 8)), rng.normal(size=(16, 8)))
    if name == "lstm_gates_backward":
        gates, c, _ = kernels.lstm_gates_forward_numpy(rng.normal(size=(16, 32)),
                                                       rng.normal(size=(16, 8)))
        return (gates, rng.normal(size=(16, 8)), c, rng.normal(size=(16, 8)),
                rng.normal(size=(16, 8)))
    raise KeyError(name)


@needs_numba
@pytest.mark.parametrize("name", ["css_residuals", "forecast_paths", "lstm_gates_forward",
                                  "lstm_gates_backward"])
def test_numba_numpy_parity(name, rng):
    args = _arguments(name, rng)
    a = kernels.NUMPY_KERNELS[name](*args)
    b = kernels.NUMBA_KERNELS[name](*args)
    for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("wd", [0.0, 0.01])
def test_adam_parity(rng, wd):
    p, g = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    states = []
    for fn in (kernels.NUMPY_KERNELS["adam_update"], kernels.NUMBA_KERNELS["adam_update"]):
        q, m, v = p.copy(), np.zeros_like(p), np.zeros_like(p)
        for step in range(1, 4):
            fn(q, g, m, v, 1e-3, 0.9, 0.999, 1e-8, wd, step)
        states.append((q, m, v))
    for x, y in zip(*states):
        np.testing.assert_allclose(x, y, rtol=1e-14, atol=1e-15)


def test_registry_names_and_backend():
    assert set(kernels.NUMPY_KERNELS) == {"css_residuals", "forecast_paths",
                                          "lstm_gates_forward", "lstm_gates_backward",
                                          "adam_update"}
    if kernels.NUMBA_KERNELS:
        assert set(kernels.NUMBA_KERNELS) == set(kernels.NUMPY_KERNELS)
        assert backend() == "numba"
    else:
        assert backend() == "numpy"
