"""Seasonal ARIMA(1,1,1)x(1,0,1)_7 with a lagged exogenous regressor.

The model is written on the first difference ``w[t] = y[t] - y[t-1]`` of
the daily AQI, with the exogenous concentration entering as its previous-day
difference::

    w[t] = phi*w[t-1] + sphi*w[t-7] + beta*dx[t-1]
           + theta*eps[t-1] + stheta*eps[t-7] + eps[t]

Coefficients are estimated by conditional sum of squares: residuals are
filtered from zero initial conditions and their squares summed from
``t = period + 1`` onward.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .. import kernels
from ..lagged import LagDataset, SplitDataset
from .spec import Family, FittedModel, ModelSpec

COEFS = ("phi", "theta", "sphi", "stheta", "beta")
_BOUND = 0.999
_EXPLOSIVE = 1e100
_CANCEL_TOL = 0.1
_LR_CRIT_2DF = 5.991464547107979  # chi-square(2) 95% quantile


class SarimaxFitError(RuntimeError):
    """Raised when the optimizer runs out of iterations.

    ``best`` holds the best parameters found so far and ``warning`` is set.
    """

    def __init__(self, message: str, best: "SarimaxParams"):
        super().__init__(message)
        self.best = best
        self.warning = True


@dataclass(frozen=True)
class SarimaxParams:
    phi: float
    theta: float
    sphi: float
    stheta: float
    beta: float
    sigma2: float
    d: int = 1
    period: int = 7
    dropped: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("phi", "theta", "sphi", "stheta"):
            value = getattr(self, name)
            if not abs(value) < 1.0:
                raise ValueError(f"|{name}| = {abs(value)} violates the unit-circle bound")
        if not (math.isfinite(self.beta) and math.isfinite(self.sigma2)) or self.sigma2 < 0:
            raise ValueError("beta and sigma2 must be finite, sigma2 >= 0")
        object.__setattr__(self, "dropped", tuple(self.dropped))
        if self.d != 1:
            raise ValueError("only first differencing (d=1) is supported")

    @property
    def coefs(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in COEFS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dropped"] = list(self.dropped)
        return d


def difference(values: np.ndarray) -> np.ndarray:
    """First difference with a leading zero, same length as the input."""
    out = np.zeros_like(values, dtype=np.float64)
    out[1:] = np.diff(values)
    return out


def residuals(params: SarimaxParams, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One-step residuals on the calendar arrays ``y`` (AQI) and ``x`` (exog)."""
    return kernels.css_residuals(difference(y), difference(x), *params.coefs, params.period)


def _css_fit(w, dx, period, free, max_iter):
    """Minimize the CSS objective over the coefficients flagged in ``free``."""
    start = period + 1
    n_eff = w.size - start
    free = np.asarray(free, dtype=bool)

    def expand(v):
        full = np.zeros(5)
        full[free] = v
        return full

    def objective(v):
        with np.errstate(over="ignore", invalid="ignore"):
            eps = kernels.css_residuals(w, dx, *expand(v), period)
            value = float(eps[start:] @ eps[start:]) / n_eff
        # explosive MA filters are pushed back inside the search region
        return value if math.isfinite(value) and value < _EXPLOSIVE else _EXPLOSIVE

    bounds = [b for b, f in zip([(-_BOUND, _BOUND)] * 4 + [(None, None)], free) if f]
    res = minimize(objective, np.zeros(int(free.sum())), method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8})
    coefs = expand(res.x)
    coefs[:4] = np.clip(coefs[:4], -_BOUND, _BOUND)
    return coefs, objective(coefs[free]), res


def fit_sarimax_arrays(y, x, period: int = 7, max_iter: int = 500,
                       reduce_common_factors: bool = True) -> SarimaxParams:
    """CSS estimates on a gap-free daily series ``y`` with exogenous ``x``.

    With ``reduce_common_factors`` an AR/MA pair whose coefficients nearly
    cancel (``|ar + ma| < 0.1``) is refitted at zero and dropped when a
    likelihood-ratio test at the 5% level finds no loss of fit. Such pairs
    are not identified, and left alone the estimate drifts along the ridge
    ``ar = -ma``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if y.shape != x.shape or y.ndim != 1:
        raise ValueError("y and x must be 1-D arrays of equal length")
    if y.size <= 2 * period + 2:
        raise ValueError(f"need more than {2 * period + 2} daily values, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise ValueError("series contains non-finite values")
    w, dx = difference(y), difference(x)
    n_eff = y.size - period - 1

    free = np.ones(5, dtype=bool)
    coefs, sse, res = _css_fit(w, dx, period, free, max_iter)
    dropped = []
    if reduce_common_factors and res.nit < max_iter:
        for a, b in ((0, 1), (2, 3)):
            if abs(coefs[a] + coefs[b]) >= _CANCEL_TOL:
                continue
            trial = free.copy()
            trial[[a, b]] = False
            r_coefs, r_sse, r_res = _css_fit(w, dx, period, trial, max_iter)
            if n_eff * math.log(r_sse / sse) < _LR_CRIT_2DF:
                free, coefs, sse, res = trial, r_coefs, r_sse, r_res
                dropped += [COEFS[a], COEFS[b]]
    params = SarimaxParams(*(float(c) for c in coefs), sigma2=float(sse), period=period,
                           dropped=tuple(dropped))
    if not res.success and res.nit >= max_iter:
        raise SarimaxFitError(f"CSS optimizer hit {max_iter} iterations: {res.message}", params)
    return params


# ---------------------------------------------------------------------------
# Daily calendar regularization
# ---------------------------------------------------------------------------


def _forward_fill(values: np.ndarray) -> np.ndarray:
    known = np.isfinite(values)
    if not known[0]:
        raise ValueError("calendar must start on an observed day")
    idx = np.where(known, np.arange(values.size), 0)
    np.maximum.accumulate(idx, out=idx)
    return values[idx]


def daily_calendar(rows: LagDataset, history: dict | None = None):
    """Gap-free daily AQI and concentration arrays covering ``rows``.

    AQI comes from both feature days and target days; concentration only from
    feature days. ``history`` (a previously built calendar) is laid down first
    so that ``rows`` extend it. Missing days are forward-filled.
    Returns ``(start_date, aqi, conc)``.
    """
    dates = [rows.dates, rows.target_dates]
    if history is not None:
        h_start = np.datetime64(history["start"], "D")
        h_dates = h_start + np.arange(len(history["aqi"]))
        dates.append(h_dates)
    lo = min(d.min() for d in dates if d.size)
    hi = max(d.max() for d in dates if d.size)
    n = int((hi - lo).astype(int)) + 1
    aqi = np.full(n, np.nan)
    conc = np.full(n, np.nan)
    if history is not None:
        off = int((h_start - lo).astype(int))
        aqi[off:off + len(history["aqi"])] = history["aqi"]
        conc[off:off + len(history["conc"])] = history["conc"]
    aqi[(rows.dates - lo).astype(int)] = rows.x_aqi
    aqi[(rows.target_dates - lo).astype(int)] = rows.y
    conc[(rows.dates - lo).astype(int)] = rows.x_conc
    return lo, _forward_fill(aqi), _forward_fill(conc)


# ---------------------------------------------------------------------------
# Fit / predict over lag datasets
# ---------------------------------------------------------------------------


def fit_sarimax(split: SplitDataset, spec: ModelSpec | None = None) -> FittedModel:
    spec = spec or ModelSpec(Family.SARIMAX)
    hp = spec.hyper
    train = split.train
    start, aqi, conc = daily_calendar(train)
    exog_center, exog_scale = 0.0, 1.0
    if hp.sarimax_scale_exog:
        exog_center, exog_scale = float(conc.mean()), float(conc.std())
        if exog_scale == 0.0:
            raise ValueError("cannot standardize a constant exogenous series")
    params = fit_sarimax_arrays(aqi, (conc - exog_center) / exog_scale, hp.period,
                                hp.sarimax_max_iter, hp.sarimax_reduce_common_factors)
    return FittedModel(
        spec, train.pollutant, train.lag,
        {
            "coefs": params.to_dict(),
            "exog_center": exog_center,
            "exog_scale": exog_scale,
            "history": {"start": str(start), "aqi": aqi, "conc": conc},
        },
        info={"calendar_days": int(aqi.size), "filled_days": int(aqi.size - len(
            np.union1d(train.dates, train.target_dates)))},
    )


def sarimax_params(model: FittedModel) -> SarimaxParams:
    return SarimaxParams(**model.params["coefs"])


def predict_sarimax(model: FittedModel, rows: LagDataset) -> np.ndarray:
    """One-step (default) or recursive forecasts of ``rows.y``.

    One-step: the prediction for target day ``s`` uses observed AQI up to
    day ``s - 1``. Recursive: the forecast is iterated from the feature day
    over the calendar distance to the target day with zero future shocks.
    """
    p = sarimax_params(model)
    start, aqi, conc = daily_calendar(rows, model.params["history"])
    x = (conc - model.params["exog_center"]) / model.params["exog_scale"]
    w, dx = difference(aqi), difference(x)
    eps = kernels.css_residuals(w, dx, *p.coefs, p.period)
    target_idx = (rows.target_dates - start).astype(np.int64)
    if model.spec.hyper.sarimax_forecast == "one_step":
        return aqi[target_idx] - eps[target_idx]
    origins = (rows.dates - start).astype(np.int64)
    return kernels.forecast_paths(aqi, w, eps, dx, *p.coefs, p.period,
                                  origins, target_idx - origins)
