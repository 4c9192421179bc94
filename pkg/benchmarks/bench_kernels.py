"""Time the numba and pure-numpy kernel paths against each other.

Kernel timings call both implementations directly in one process. The
end-to-end timings fit models in child processes, once with numba enabled
and once with ``AQIFORECAST_DISABLE_NUMBA=1``, because the switch is read at
import time.

    python benchmarks/bench_kernels.py [--repeat 5] [--skip-end-to-end]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from aqiforecast import kernels

_FIT_SNIPPET = """
import json, time
from aqiforecast._accel import backend
from aqiforecast.lagged import build_lag_dataset, chrono_split
from aqiforecast.models import ModelSpec, fit
from aqiforecast.synthetic import synthetic_series
split = chrono_split(build_lag_dataset(synthetic_series("PM25", seed=0), 1))
out = {"backend": backend()}
for fam, over in (("LSTM", {"epochs": 10, "early_stopping": False}),
                  ("MLP", {"epochs": 200}), ("SARIMAX", {})):
    spec = ModelSpec.build(fam, over)
    fit(split, spec)  # warm-up (JIT compile / cache load)
    t = time.perf_counter()
    fit(split, spec)
    out[fam] = time.perf_counter() - t
print(json.dumps(out))
"""


def kernel_cases(rng: np.random.Generator) -> dict:
    n, bsz, hid = 1000, 32, 32
    w, dx = rng.normal(size=n), rng.normal(size=n)
    coefs = (0.4, -0.2, 0.1, 0.05, 0.3, 7)
    z = rng.normal(size=(bsz, 4 * hid))
    c_prev = rng.normal(size=(bsz, hid))
    gates, c, _ = kernels.lstm_gates_forward_numpy(z, c_prev)
    dh, dc = rng.normal(size=(bsz, hid)), rng.normal(size=(bsz, hid))
    eps = kernels.css_residuals_numpy(w, dx, *coefs)
    y = np.cumsum(w)
    origins = np.arange(800, 970, dtype=np.int64)
    horizons = np.full(origins.shape, 30, dtype=np.int64)
    p = rng.normal(size=(128, 64))
    g = rng.normal(size=p.shape)
    return {
        "css_residuals": lambda f: f(w, dx, *coefs),
        "forecast_paths": lambda f: f(y, w, eps, dx, *coefs[:5], 7, origins, horizons),
        "lstm_gates_forward": lambda f: f(z, c_prev),
        "lstm_gates_backward": lambda f: f(gates, c_prev, c, dh, dc),
        "adam_update": lambda f: f(p.copy(), g, np.zeros_like(p), np.zeros_like(p),
                                   1e-3, 0.9, 0.999, 1e-8, 0.01, 3),
    }


def time_kernels(repeat: int) -> list[tuple[str, float, float | None]]:
    cases = kernel_cases(np.random.default_rng(0))
    rows = []
    for name, call in cases.items():
        paths = {"numpy": kernels.NUMPY_KERNELS[name]}
        if kernels.HAVE_NUMBA:
            paths["numba"] = kernels.NUMBA_KERNELS[name]
            call(paths["numba"])  # compile outside the timed region
        best = {}
        for label, fn in paths.items():
            timer = timeit.Timer(lambda: call(fn))
            number, _ = timer.autorange()
            best[label] = min(timer.repeat(repeat, number)) / number
        rows.append((name, best["numpy"], best.get("numba")))
    return rows


def time_end_to_end() -> dict:
    out = {}
    for label, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, AQIFORECAST_DISABLE_NUMBA=disable)
        proc = subprocess.run([sys.executable, "-c", _FIT_SNIPPET], env=env,
                              capture_output=True, text=True, check=True)
        out[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args(argv)

    print("| kernel | numpy (us) | numba (us) | speed-up |")
    print("| :-- | --: | --: | --: |")
    for name, t_np, t_nb in time_kernels(args.repeat):
        if t_nb is None:
            print(f"| {name} | {t_np * 1e6:.1f} | n/a | n/a |")
        else:
            print(f"| {name} | {t_np * 1e6:.1f} | {t_nb * 1e6:.1f} | {t_np / t_nb:.2f}x |")
    if not args.skip_end_to_end:
        res = time_end_to_end()
        print()
        print("| fit | numpy path (s) | numba path (s) |")
        print("| :-- | --: | --: |")
        for fam in ("LSTM", "MLP", "SARIMAX"):
            print(f"| {fam} | {res['numpy'][fam]:.3f} | {res['numba'][fam]:.3f} |")
        if res["numba"]["backend"] != "numba":
            print("\nnote: numba is not installed, both runs used the numpy path")
    return 0


if __name__ == "__main__":
    sys.exit(main())
