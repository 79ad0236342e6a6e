import os
import subprocess
import sys

import numpy as np

from wavemine._kernels import (
    backend_name,
    concordance_counts_nb,
    concordance_counts_py,
    cox_suffix_sums_nb,
    cox_suffix_sums_py,
)


def test_concordance_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 80))
        scores = rng.normal(size=n)
        scores[rng.random(n) < 0.3] = 0.0  # force score ties
        times = rng.integers(1, 6, size=n).astype(float)
        events = rng.random(n) < 0.4
        assert concordance_counts_py(scores, times, events) == concordance_counts_nb(
            scores, times, events
        )


def test_cox_suffix_sums_backends_agree():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n, p = int(rng.integers(2, 50)), int(rng.integers(1, 6))
        w = np.exp(rng.normal(size=n))
        x = rng.normal(size=(n, p))
        s0a, s1a = cox_suffix_sums_py(w, x)
        s0b, s1b = cox_suffix_sums_nb(w, x)
        assert np.allclose(s0a, s0b, atol=1e-9)
        assert np.allclose(s1a, s1b, atol=1e-9)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, WAVEMINE_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from wavemine._kernels import backend_name; print(backend_name())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_default_backend_is_numba_when_available():
    assert backend_name() in ("numba", "numpy")
    if not os.environ.get("WAVEMINE_NO_NUMBA"):
        assert backend_name() == "numba"
