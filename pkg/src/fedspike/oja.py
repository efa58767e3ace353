"""Federated differentially private streaming-PCA comparison baseline.

A good-faith reconstruction of a private Oja iteration: each client clips
its observations, runs per-sample updates with Gaussian gradient noise,
and the per-client frames are projector-averaged with equal weights. The
per-step noise splits the client's whole budget across its T updates,

    sigma_step = Delta_step * sqrt(2 log(1.25/delta) * T) / epsilon,

with Delta_step = 2 * clip_norm^2 (the worst-case gradient change under a
one-datum replacement given the clip ball). Only the qualitative ordering
against the main method is meaningful; all constants live in OjaConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import oja_stream
from .model import Dataset, random_orthonormal
from .privacy import PrivacyBudget
from .rng import derive_seed, rng_from
from .spectral import svd_r


@dataclass(frozen=True)
class OjaConfig:
    """Step schedule, rank, clipping, and the per-step noise policy.

    noise_per_step is a variance override; None calibrates from the budget.
    """

    rank_r: int
    step0: float = 1.0
    decay: float = 1.0
    passes: int = 1
    clip_norm: float = math.inf
    noise_per_step: float | None = None
    reorth_every: int = 1

    def __post_init__(self):
        if self.rank_r < 1:
            raise ValueError("rank_r must be at least 1")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if self.passes < 1:
            raise ValueError("passes must be at least 1")
        if self.reorth_every < 1:
            raise ValueError("reorth_every must be at least 1")
        if self.noise_per_step is not None and self.noise_per_step < 0:
            raise ValueError("noise_per_step must be non-negative")


def default_clip_norm(lam: float, sigma2: float, p: int) -> float:
    """Clip ball radius 3 * sqrt(lam + sigma2 * p), about three sigma of
    the observation norm under the spiked model."""
    return 3.0 * math.sqrt(lam + sigma2 * p)


def oja_step_noise_std(budget: PrivacyBudget, clip_norm: float, total_steps: int) -> float:
    """Per-step gradient-noise standard deviation for the whole budget."""
    if not math.isfinite(clip_norm):
        raise ValueError("noise calibration requires a finite clip_norm")
    delta_step = 2.0 * clip_norm**2
    return (
        delta_step
        * math.sqrt(2.0 * math.log(1.25 / budget.delta) * total_steps)
        / budget.epsilon
    )


def fed_dp_oja(
    datasets: Sequence[Dataset],
    cfg: OjaConfig,
    budgets: Sequence[PrivacyBudget],
    seed: int,
) -> np.ndarray:
    """Equal-weight projector average of per-client private Oja runs."""
    if len(datasets) < 1:
        raise ValueError("need at least one client dataset")
    if len(budgets) != len(datasets):
        raise ValueError("budgets and datasets must pair up")
    p = datasets[0].dim_p
    r = cfg.rank_r
    acc = np.zeros((p, p))
    for j, (data, budget) in enumerate(zip(datasets, budgets)):
        if data.dim_p != p:
            raise ValueError("all clients must share the data dimension")
        xs = np.ascontiguousarray(data.samples.T)
        if cfg.passes > 1:
            xs = np.ascontiguousarray(np.tile(xs, (cfg.passes, 1)))
        total_steps = xs.shape[0]
        if cfg.noise_per_step is not None:
            noise_std = math.sqrt(cfg.noise_per_step)
        else:
            noise_std = oja_step_noise_std(budget, cfg.clip_norm, total_steps)
        v0 = random_orthonormal(p, r, derive_seed(seed, "oja-init", j))
        if noise_std > 0.0:
            noise = rng_from(seed, "oja-noise", j).standard_normal((total_steps, p, r))
        else:
            noise = np.zeros((1, p, r))
        v = oja_stream(
            xs, v0, cfg.step0, cfg.decay, cfg.clip_norm, noise_std, noise, cfg.reorth_every
        )
        acc += (v @ v.T) / len(datasets)
    return svd_r(acc, r)
