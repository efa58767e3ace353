"""Local-client computations: privatized projector and eigenvalue releases.

A client's seed expands into two labeled sub-streams ("projector-noise",
"eigenvalue-noise") so the round-1 and round-2 noise draws are independent.
The released frame depends on the data only through the sample covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .messages import EigenvalueMessage, ProjectorMessage
from .model import Dataset
from .privacy import PrivacyBudget, calibrate, sample_symmetric_noise
from .rng import derive_seed
from .spectral import sample_covariance, svd_r, sym_eig

_GAP_TOL = 1e-12


@dataclass(frozen=True)
class ClientConfig:
    """Identity, budget, target rank, plug-in scales, and the seed."""

    client_id: str
    budget: PrivacyBudget
    rank_r: int
    lambda_plugin: float
    sigma2_plugin: float
    seed: int

    def __post_init__(self):
        if self.rank_r < 1:
            raise ValueError("rank_r must be at least 1")
        if not (self.lambda_plugin > 0 and self.sigma2_plugin > 0):
            raise ValueError("plug-in lambda and sigma2 must be positive")


def _noisy_projector_matrix(data: Dataset, cfg: ClientConfig):
    """Sample-covariance projector plus calibrated symmetric noise."""
    p, n = data.dim_p, data.n_samples
    r = cfg.rank_r
    if n < r:
        raise ValueError(f"need at least r={r} observations, got {n}")
    if r > p:
        raise ValueError(f"rank_r={r} exceeds data dimension {p}")
    eig = sym_eig(sample_covariance(data))
    warning = None
    if r < p and eig.values[r - 1] - eig.values[r] <= _GAP_TOL:
        warning = (
            f"degenerate sample spectrum: top-{r} eigengap "
            f"{eig.values[r - 1] - eig.values[r]:.3e}; noise regularizes"
        )
    u_tilde = eig.vectors[:, :r]
    cal = calibrate(cfg.budget, p, r, n, cfg.lambda_plugin, cfg.sigma2_plugin)
    z = sample_symmetric_noise(p, cal.alpha_sq, derive_seed(cfg.seed, "projector-noise"))
    return u_tilde @ u_tilde.T + z, warning


def local_private_projector(data: Dataset, cfg: ClientConfig) -> ProjectorMessage:
    """Round-1 release: top-r frame of the noisy projector matrix."""
    noisy, warning = _noisy_projector_matrix(data, cfg)
    u_hat = svd_r(noisy, cfg.rank_r)
    return ProjectorMessage(
        client_id=cfg.client_id,
        u_hat=u_hat,
        n=data.n_samples,
        epsilon=cfg.budget.epsilon,
        delta=cfg.budget.delta,
        warning=warning,
    )


def local_raw_noisy_projector(data: Dataset, cfg: ClientConfig) -> np.ndarray:
    """The full noisy projector matrix, as transmitted by the reference
    baseline that skips the client-side spectral truncation.

    Uses the same noise stream as local_private_projector, so for a fixed
    seed the two releases share their noise draw.
    """
    noisy, _ = _noisy_projector_matrix(data, cfg)
    return noisy


def local_private_eigenvalues(
    data: Dataset, u_hat_global: np.ndarray, cfg: ClientConfig
) -> EigenvalueMessage:
    """Round-2 release: U^T (S - sigma2 I) U plus calibrated noise.

    The block is released as drawn; it is not projected to the PSD cone.
    """
    u = np.asarray(u_hat_global, dtype=float)
    p, n = data.dim_p, data.n_samples
    r = cfg.rank_r
    if u.shape != (p, r):
        raise ValueError(f"broadcast frame shape {u.shape} does not match (p={p}, r={r})")
    s = sample_covariance(data)
    core = u.T @ s @ u
    core = (core + core.T) / 2.0
    core[np.diag_indices_from(core)] -= cfg.sigma2_plugin
    cal = calibrate(cfg.budget, p, r, n, cfg.lambda_plugin, cfg.sigma2_plugin)
    e = sample_symmetric_noise(r, cal.beta_sq, derive_seed(cfg.seed, "eigenvalue-noise"))
    return EigenvalueMessage(client_id=cfg.client_id, lambda_hat=core + e)
