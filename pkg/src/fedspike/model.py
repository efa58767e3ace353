"""Spiked covariance ground truth, Gaussian sampling, and subspace metrics.

The population covariance is a rank-r deformation of the scaled identity,
``Sigma = U diag(spikes) U^T + noise_var * I``, with orthonormal ``U``.
Samples are generated in the factored form ``x = U diag(sqrt(spikes)) g +
sqrt(noise_var) z`` (g, z standard normal), which is exact in distribution
and avoids forming the p x p covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import rng_from

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpikedModel:
    """Ground-truth parameters (U, spike eigenvalues, noise variance)."""

    basis_u: np.ndarray
    spike_eigenvalues: np.ndarray
    noise_var: float

    def __post_init__(self):
        u = np.array(self.basis_u, dtype=float)
        spikes = np.atleast_1d(np.array(self.spike_eigenvalues, dtype=float))
        object.__setattr__(self, "basis_u", u)
        object.__setattr__(self, "spike_eigenvalues", spikes)
        if u.ndim != 2:
            raise ValueError("basis_u must be a p x r matrix")
        p, r = u.shape
        if not 1 <= r <= p:
            raise ValueError(f"rank r={r} must satisfy 1 <= r <= p={p}")
        if spikes.shape != (r,):
            raise ValueError("spike_eigenvalues must have length r")
        if np.any(spikes <= 0):
            raise ValueError("spike eigenvalues must be positive")
        if np.any(np.diff(spikes) > 0):
            raise ValueError("spike eigenvalues must be non-increasing")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")
        gram_err = np.linalg.norm(u.T @ u - np.eye(r))
        if not gram_err <= ORTHONORMAL_TOL:
            raise ValueError(f"basis_u is not orthonormal (|U'U - I|_F = {gram_err:.3e})")

    @property
    def dim_p(self) -> int:
        return self.basis_u.shape[0]

    @property
    def rank_r(self) -> int:
        return self.basis_u.shape[1]

    @property
    def spike_scalar(self) -> float:
        """Scalar spike strength used by the rate formulas (smallest spike)."""
        return float(self.spike_eigenvalues[-1])


@dataclass(frozen=True, eq=False)
class Dataset:
    """A client's observations, stored as columns of a p x n matrix."""

    samples: np.ndarray
    client_id: str | None = None

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        object.__setattr__(self, "samples", x)
        if x.ndim != 2:
            raise ValueError("samples must be a p x n matrix")
        if x.shape[1] < 1:
            raise ValueError("dataset must contain at least one observation")
        if not np.all(np.isfinite(x)):
            raise ValueError("dataset contains non-finite entries")

    @property
    def dim_p(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


def random_orthonormal(p: int, r: int, seed: int) -> np.ndarray:
    """Orthonormal p x r frame: QR of an i.i.d. standard normal matrix.

    Column signs are fixed by the sign of R's diagonal so the output is a
    canonical deterministic function of the seed.
    """
    if p < 1 or r < 1:
        raise ValueError("p and r must be positive")
    if r > p:
        raise ValueError(f"cannot build {r} orthonormal columns in dimension {p}")
    g = rng_from(seed, "orthonormal").standard_normal((p, r))
    q, rmat = np.linalg.qr(g)
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return q * signs


def covariance_matrix(model: SpikedModel) -> np.ndarray:
    """Dense population covariance U diag(spikes) U^T + noise_var * I."""
    u = model.basis_u
    sigma = (u * model.spike_eigenvalues) @ u.T
    sigma[np.diag_indices_from(sigma)] += model.noise_var
    return (sigma + sigma.T) / 2.0


def sample(model: SpikedModel, n: int, seed: int, client_id: str | None = None) -> Dataset:
    """n i.i.d. zero-mean Gaussian observations with the model covariance.

    Draw order is fixed (spike coefficients first, then the isotropic part)
    so a given seed yields a bit-identical dataset.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng_from(seed, "sample")
    g = rng.standard_normal((model.rank_r, n))
    z = rng.standard_normal((model.dim_p, n))
    scale = np.sqrt(model.spike_eigenvalues)[:, None]
    x = model.basis_u @ (scale * g) + np.sqrt(model.noise_var) * z
    return Dataset(x, client_id)


def projection_distance(u1: np.ndarray, u2: np.ndarray) -> float:
    """Frobenius distance between the spectral projectors of two frames.

    Equals ||U1 U1^T - U2 U2^T||_F, computed as sqrt(2r - 2 ||U1^T U2||_F^2)
    and clamped at zero against roundoff.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.ndim != 2 or u1.shape != u2.shape:
        raise ValueError(f"frames must share a p x r shape, got {u1.shape} and {u2.shape}")
    if u1 is u2 or np.array_equal(u1, u2):
        return 0.0
    cross = u1.T @ u2
    sq = 2.0 * u1.shape[1] - 2.0 * float(np.sum(cross * cross))
    return float(np.sqrt(max(sq, 0.0)))


def save_dataset_csv(data: Dataset, path) -> None:
    """Write observations one per row (p columns, no header)."""
    np.savetxt(path, data.samples.T, delimiter=",", fmt="%.17g")


def load_dataset_csv(path, header: bool = False, client_id: str | None = None) -> Dataset:
    """Read a dataset written one observation per row; `header` skips row 1."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return Dataset(rows.T, client_id)
