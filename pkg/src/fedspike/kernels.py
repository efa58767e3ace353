"""Hot streaming kernels, numba-jitted with a pure-numpy fallback.

The per-sample update loop of the streaming-PCA baseline dominates its
runtime, so it is compiled with numba's @njit when available. Setting the
environment variable ``FEDSPIKE_NO_NUMBA=1`` (before import) selects the
interpreted numpy path instead; both paths run the same source, consume
pre-generated noise, and produce the same result. The script
``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("FEDSPIKE_NO_NUMBA", "") not in ("", "0")


def _oja_stream(xs, v0, step0, decay, clip_norm, noise_scale, noise, reorth_every):
    """Streaming subspace update over the rows of xs.

    v <- orth(v + eta_t (x x^T v + noise_scale * N_t)), eta_t = step0 / t^decay.
    Observations with norm above clip_norm are rescaled onto the clip ball.
    `noise` holds the pre-generated standard-normal N_t stack; it is only
    indexed when noise_scale > 0, so a dummy array may be passed otherwise.
    """
    v = v0.copy()
    n = xs.shape[0]
    for t in range(n):
        x = xs[t]
        sq = 0.0
        # scalar accumulation keeps both paths' summation order identical
        for k in range(x.shape[0]):
            sq += x[k] * x[k]
        nrm = np.sqrt(sq)
        if nrm > clip_norm:
            x = x * (clip_norm / nrm)
        y = x @ v
        g = x.reshape(-1, 1) * y.reshape(1, -1)
        if noise_scale > 0.0:
            g = g + noise_scale * noise[t]
        eta = step0 / (t + 1.0) ** decay
        v = v + eta * g
        if (t + 1) % reorth_every == 0:
            q, _ = np.linalg.qr(v)
            v = np.ascontiguousarray(q)
    q, _ = np.linalg.qr(v)
    return np.ascontiguousarray(q)


oja_stream_python = _oja_stream

if _DISABLE:
    NUMBA_ENABLED = False
    oja_stream = _oja_stream
else:
    try:
        from numba import njit

        oja_stream = njit(cache=True)(_oja_stream)
        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
        oja_stream = _oja_stream


def using_numba() -> bool:
    """True when the jitted path is active."""
    return NUMBA_ENABLED
