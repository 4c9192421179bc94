"""Hot numeric kernels with a numba path and a pure-numpy path.

Every kernel ``k`` exists as ``k_numpy`` and (when numba is importable)
``k_numba``; the bare name ``k`` is bound to whichever path is active, see
:mod:`aqiforecast._accel`. Both paths implement the same arithmetic; results
agree to rounding (``exp``/``tanh`` come from different libm builds), and each
path is deterministic on its own.
"""

import numpy as np
from scipy.signal import lfilter

from ._accel import HAVE_NUMBA, njit

# --------------------------------------------------------------------------
# Seasonal ARMA-X residual filter
# --------------------------------------------------------------------------


def css_residuals_numpy(w, dx, phi, theta, sphi, stheta, beta, period):
    """One-step residuals of the additive seasonal ARMA-X recursion.

    ``eps[t] = w[t] - phi*w[t-1] - sphi*w[t-s] - beta*dx[t-1]
               - theta*eps[t-1] - stheta*eps[t-s]``

    with every out-of-range term taken as zero.
    """
    w = np.asarray(w, dtype=np.float64)
    dx = np.asarray(dx, dtype=np.float64)
    n = w.shape[0]
    u = w.copy()
    if n > 1:
        u[1:] -= phi * w[:-1] + beta * dx[: n - 1]
    if n > period:
        u[period:] -= sphi * w[:-period]
    a = np.zeros(period + 1)
    a[0] = 1.0
    a[1] += theta
    a[period] += stheta
    return lfilter([1.0], a, u)


def _css_residuals_loop(w, dx, phi, theta, sphi, stheta, beta, period):
    n = w.shape[0]
    eps = np.zeros(n)
    for t in range(n):
        e = w[t]
        if t >= 1:
            e -= phi * w[t - 1] + beta * dx[t - 1] + theta * eps[t - 1]
        if t >= period:
            e -= sphi * w[t - period] + stheta * eps[t - period]
        eps[t] = e
    return eps


def forecast_paths_numpy(y, w, eps, dx, phi, theta, sphi, stheta, beta, period,
                         origins, horizons):
    """Recursive multi-step level forecasts from each origin.

    For origin ``o`` and horizon ``h`` the differenced process is iterated
    ``h`` steps with future shocks set to zero and observed exogenous
    differences, then integrated back onto ``y[o]``.
    """
    out = np.empty(origins.shape[0])
    for r in range(origins.shape[0]):
        o = int(origins[r])
        h = int(horizons[r])
        path = np.zeros(h + 1)
        level = y[o]
        for k in range(1, h + 1):
            j = o + k
            lag1 = path[k - 1] if k > 1 else (w[j - 1] if j - 1 >= 0 else 0.0)
            e1 = eps[j - 1] if k == 1 and j - 1 >= 0 else 0.0
            js = j - period
            if js < 0:
                lags, es = 0.0, 0.0
            elif js <= o:
                lags, es = w[js], eps[js]
            else:
                lags, es = path[js - o], 0.0
            path[k] = (phi * lag1 + sphi * lags + theta * e1 + stheta * es
                       + beta * dx[j - 1])
            level += path[k]
        out[r] = level
    return out


# --------------------------------------------------------------------------
# LSTM gate non-linearities (gate order: input, forget, output, candidate)
# --------------------------------------------------------------------------


def _sigmoid_np(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_gates_forward_numpy(z, c_prev):
    """Activate stacked pre-activations ``z`` (B, 4H) and advance the cell.

    Returns ``(gates, c, h)`` where ``gates`` holds the activated
    ``[i, f, o, g]`` blocks side by side.
    """
    hid = c_prev.shape[1]
    gates = np.empty_like(z)
    gates[:, : 3 * hid] = _sigmoid_np(z[:, : 3 * hid])
    gates[:, 3 * hid:] = np.tanh(z[:, 3 * hid:])
    i = gates[:, :hid]
    f = gates[:, hid: 2 * hid]
    o = gates[:, 2 * hid: 3 * hid]
    g = gates[:, 3 * hid:]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return gates, c, h


def lstm_gates_backward_numpy(gates, c_prev, c, dh, dc):
    """Back-propagate through the gate block; returns ``(dz, dc_prev)``."""
    hid = c_prev.shape[1]
    i = gates[:, :hid]
    f = gates[:, hid: 2 * hid]
    o = gates[:, 2 * hid: 3 * hid]
    g = gates[:, 3 * hid:]
    tc = np.tanh(c)
    dc_total = dc + dh * o * (1.0 - tc * tc)
    dz = np.empty_like(gates)
    dz[:, :hid] = dc_total * g * i * (1.0 - i)
    dz[:, hid: 2 * hid] = dc_total * c_prev * f * (1.0 - f)
    dz[:, 2 * hid: 3 * hid] = dh * tc * o * (1.0 - o)
    dz[:, 3 * hid:] = dc_total * i * (1.0 - g * g)
    return dz, dc_total * f


def _sigmoid_scalar(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def _lstm_gates_forward_loop(z, c_prev):
    bsz, hid = c_prev.shape
    gates = np.empty_like(z)
    c = np.empty_like(c_prev)
    h = np.empty_like(c_prev)
    for b in range(bsz):
        for k in range(hid):
            i = _sigmoid_scalar(z[b, k])
            f = _sigmoid_scalar(z[b, hid + k])
            o = _sigmoid_scalar(z[b, 2 * hid + k])
            g = np.tanh(z[b, 3 * hid + k])
            gates[b, k] = i
            gates[b, hid + k] = f
            gates[b, 2 * hid + k] = o
            gates[b, 3 * hid + k] = g
            ck = f * c_prev[b, k] + i * g
            c[b, k] = ck
            h[b, k] = o * np.tanh(ck)
    return gates, c, h


def _lstm_gates_backward_loop(gates, c_prev, c, dh, dc):
    bsz, hid = c_prev.shape
    dz = np.empty_like(gates)
    dc_prev = np.empty_like(c_prev)
    for b in range(bsz):
        for k in range(hid):
            i = gates[b, k]
            f = gates[b, hid + k]
            o = gates[b, 2 * hid + k]
            g = gates[b, 3 * hid + k]
            tc = np.tanh(c[b, k])
            dct = dc[b, k] + dh[b, k] * o * (1.0 - tc * tc)
            dz[b, k] = dct * g * i * (1.0 - i)
            dz[b, hid + k] = dct * c_prev[b, k] * f * (1.0 - f)
            dz[b, 2 * hid + k] = dh[b, k] * tc * o * (1.0 - o)
            dz[b, 3 * hid + k] = dct * i * (1.0 - g * g)
            dc_prev[b, k] = dct * f
    return dz, dc_prev


# --------------------------------------------------------------------------
# Adam / AdamW in-place update
# --------------------------------------------------------------------------


def adam_update_numpy(p, g, m, v, lr, beta1, beta2, eps, weight_decay, step):
    """Bias-corrected Adam step applied in place; ``weight_decay`` is decoupled."""
    if weight_decay != 0.0:
        p *= 1.0 - lr * weight_decay
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def _adam_update_loop(p, g, m, v, lr, beta1, beta2, eps, weight_decay, step):
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    fp = p.reshape(-1)
    fg = g.reshape(-1)
    fm = m.reshape(-1)
    fv = v.reshape(-1)
    for k in range(fp.shape[0]):
        if weight_decay != 0.0:
            fp[k] *= 1.0 - lr * weight_decay
        fm[k] = beta1 * fm[k] + (1.0 - beta1) * fg[k]
        fv[k] = beta2 * fv[k] + (1.0 - beta2) * fg[k] * fg[k]
        fp[k] -= lr * (fm[k] / bc1) / (np.sqrt(fv[k] / bc2) + eps)


NUMPY_KERNELS = {
    "css_residuals": css_residuals_numpy,
    "forecast_paths": forecast_paths_numpy,
    "lstm_gates_forward": lstm_gates_forward_numpy,
    "lstm_gates_backward": lstm_gates_backward_numpy,
    "adam_update": adam_update_numpy,
}

if HAVE_NUMBA:
    _sigmoid_scalar = njit(cache=True)(_sigmoid_scalar)
    css_residuals_numba = njit(cache=True)(_css_residuals_loop)
    forecast_paths_numba = njit(cache=True)(forecast_paths_numpy)
    lstm_gates_forward_numba = njit(cache=True)(_lstm_gates_forward_loop)
    lstm_gates_backward_numba = njit(cache=True)(_lstm_gates_backward_loop)
    adam_update_numba = njit(cache=True)(_adam_update_loop)

    NUMBA_KERNELS = {
        "css_residuals": css_residuals_numba,
        "forecast_paths": forecast_paths_numba,
        "lstm_gates_forward": lstm_gates_forward_numba,
        "lstm_gates_backward": lstm_gates_backward_numba,
        "adam_update": adam_update_numba,
    }
    css_residuals = css_residuals_numba
    forecast_paths = forecast_paths_numba
    lstm_gates_forward = lstm_gates_forward_numba
    lstm_gates_backward = lstm_gates_backward_numba
    adam_update = adam_update_numba
else:
    NUMBA_KERNELS = {}
    css_residuals = css_residuals_numpy
    forecast_paths = forecast_paths_numpy
    lstm_gates_forward = lstm_gates_forward_numpy
    lstm_gates_backward = lstm_gates_backward_numpy
    adam_update = adam_update_numpy
