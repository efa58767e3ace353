"""Central-server aggregation: weights, projector averaging, assembly.

Weight/message pairing is always by client_id (stable sort), never by
arrival order. All weight schemes produce simplex vectors; the "optimal"
scheme is inverse-square in the per-client subspace rate, and the
"data_independent" scheme uses the budget-only bracket (inverse-square by
default; ``as_printed`` reproduces the plain-proportional variant for
comparison).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .messages import EigenvalueMessage, ProjectorMessage
from .rates import RateInputs, psi0_tilde
from .spectral import svd_r, sym_eig

logger = logging.getLogger(__name__)

SCHEMES = ("optimal", "data_independent", "equal")
_SIMPLEX_TOL = 1e-12
_SYM_LOG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AggregationWeights:
    """Simplex weights for the projector average (pca_w) and covariance
    assembly (cov_v), in sorted-client_id order."""

    pca_w: np.ndarray
    cov_v: np.ndarray
    scheme: str

    def __post_init__(self):
        for name in ("pca_w", "cov_v"):
            w = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            object.__setattr__(self, name, w)
            if w.ndim != 1 or w.size < 1:
                raise ValueError(f"{name} must be a non-empty vector")
            if np.any(w < 0):
                raise ValueError(f"{name} has negative entries")
            if abs(w.sum() - 1.0) > _SIMPLEX_TOL:
                raise ValueError(f"{name} must sum to 1 (got {w.sum()!r})")
        if self.pca_w.size != self.cov_v.size:
            raise ValueError("weight vectors must have equal length")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def m(self) -> int:
        return self.pca_w.size

    def restrict(self, keep_ids: Sequence[str], all_ids: Sequence[str]) -> "AggregationWeights":
        """Renormalize over a surviving subset of clients (dropout mode)."""
        order = sorted(all_ids)
        mask = np.array([cid in set(keep_ids) for cid in order])
        if not mask.any():
            raise ValueError("cannot restrict weights to an empty client set")
        w = self.pca_w[mask]
        v = self.cov_v[mask]
        return AggregationWeights(w / w.sum(), v / v.sum(), self.scheme)


def _normalized(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if not (np.all(raw > 0) and math.isfinite(total) and total > 0):
        raise ValueError("weights must be positive and finite before normalization")
    return raw / total


def _cov_raw(c: RateInputs) -> float:
    noise = (
        8.0
        / c.epsilon**2
        * math.log(2.5 / c.delta)
        * (c.lam**2 * (c.r + math.log(c.n)) ** 2 + c.sigma2**2 * c.p**2)
        / c.n**2
    )
    return 1.0 / ((c.lam**2 + c.sigma2**2) / c.n + noise)


def _data_independent_bracket(c: RateInputs) -> float:
    return math.sqrt(c.p / c.n) + (c.p / (c.n * c.epsilon)) * math.sqrt(
        (c.r + math.log(c.n)) * math.log(2.5 / c.delta)
    )


def weights_from_rate_inputs(
    clients: Sequence[RateInputs], scheme: str = "optimal", as_printed: bool = False
) -> AggregationWeights:
    """Weights from fully specified per-client rate inputs.

    Accepts heterogeneous plug-in (lam, sigma2) across clients, which is
    the real-data workflow where each client estimates its own scales.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose one of {SCHEMES}")
    m = len(clients)
    if m < 1:
        raise ValueError("need at least one client")
    if scheme == "equal":
        w = np.full(m, 1.0 / m)
        return AggregationWeights(w, w.copy(), scheme)
    if scheme == "optimal":
        w = _normalized(np.array([psi0_tilde(c) ** -2 for c in clients]))
    else:
        brackets = np.array([_data_independent_bracket(c) for c in clients])
        w = _normalized(brackets if as_printed else brackets**-2)
    v = _normalized(np.array([_cov_raw(c) for c in clients]))
    return AggregationWeights(w, v, scheme)


def pca_weights(
    client_params: Sequence[tuple],
    p: int,
    r: int,
    lam: float,
    sigma2: float,
    scheme: str = "optimal",
    as_printed: bool = False,
) -> AggregationWeights:
    """Weights from per-client (n, epsilon, delta) and shared plug-ins."""
    clients = [RateInputs(n, eps, delta, p, r, lam, sigma2) for n, eps, delta in client_params]
    return weights_from_rate_inputs(clients, scheme, as_printed)


def cov_weights(
    client_params: Sequence[tuple], p: int, r: int, lam: float, sigma2: float
) -> AggregationWeights:
    """Covariance-assembly weights (scheme fixed to optimal)."""
    return pca_weights(client_params, p, r, lam, sigma2, scheme="optimal")


def weights_from_messages(
    msgs: Sequence[ProjectorMessage],
    r: int,
    lam: float,
    sigma2: float,
    scheme: str = "optimal",
    as_printed: bool = False,
) -> AggregationWeights:
    """Weights from the (n, epsilon, delta) carried by round-1 messages."""
    ordered = _sorted_by_id(msgs)
    p = ordered[0].u_hat.shape[0]
    params = [(m.n, m.epsilon, m.delta) for m in ordered]
    return pca_weights(params, p, r, lam, sigma2, scheme, as_printed)


def _sorted_by_id(msgs: Sequence) -> list:
    ids = [m.client_id for m in msgs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate client_id among messages")
    return sorted(msgs, key=lambda m: m.client_id)


def _pca_vector(weights) -> np.ndarray:
    if isinstance(weights, AggregationWeights):
        return weights.pca_w
    return np.asarray(weights, dtype=float)


def _cov_vector(weights) -> np.ndarray:
    if isinstance(weights, AggregationWeights):
        return weights.cov_v
    return np.asarray(weights, dtype=float)


def aggregate_projectors(msgs: Sequence[ProjectorMessage], weights) -> np.ndarray:
    """Top-r frame of the weighted projector average.

    Messages are sorted by client_id; weights[i] belongs to the i-th id in
    sorted order.
    """
    ordered = _sorted_by_id(msgs)
    w = _pca_vector(weights)
    if w.size != len(ordered):
        raise ValueError(f"{len(ordered)} messages but {w.size} weights")
    p, r = ordered[0].u_hat.shape
    acc = np.zeros((p, p))
    for wi, msg in zip(w, ordered):
        u = msg.u_hat
        if u.shape != (p, r):
            raise ValueError(f"client {msg.client_id}: frame shape {u.shape} != ({p}, {r})")
        acc += wi * (u @ u.T)
    return svd_r(acc, r)


def aggregate_reference(raw: Sequence[np.ndarray], weights, r: int) -> np.ndarray:
    """Top-r frame of the weighted sum of raw noisy projector matrices.

    The raw matrices are full p x p payloads (no client-side truncation),
    so the target rank must be given; pairing with weights is positional.
    """
    w = _pca_vector(weights)
    if w.size != len(raw):
        raise ValueError(f"{len(raw)} matrices but {w.size} weights")
    p = np.asarray(raw[0]).shape[0]
    acc = np.zeros((p, p))
    for wi, mat in zip(w, raw):
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (p, p):
            raise ValueError(f"raw matrix shape {mat.shape} != ({p}, {p})")
        acc += wi * mat
    return svd_r(acc, r)


def assemble_covariance(
    u_hat: np.ndarray,
    eig_msgs: Sequence[EigenvalueMessage],
    weights,
    sigma2: float,
    psd_clip: bool = False,
) -> np.ndarray:
    """Covariance estimate U (sum_j v_j Lambda_j) U^T + sigma2 I.

    Eigenvalue blocks are defensively symmetrized; deviations beyond 1e-8
    are logged. ``psd_clip`` optionally clips negative eigenvalues of the
    assembled matrix at zero (off by default: the guarantee is for the
    unclipped estimator).
    """
    u = np.asarray(u_hat, dtype=float)
    ordered = _sorted_by_id(eig_msgs)
    v = _cov_vector(weights)
    if v.size != len(ordered):
        raise ValueError(f"{len(ordered)} messages but {v.size} weights")
    r = u.shape[1]
    lam_bar = np.zeros((r, r))
    for vi, msg in zip(v, ordered):
        lam = msg.lambda_hat
        if lam.shape != (r, r):
            raise ValueError(f"client {msg.client_id}: block shape {lam.shape} != ({r}, {r})")
        asym = np.max(np.abs(lam - lam.T))
        if asym > _SYM_LOG_TOL:
            logger.warning(
                "client %s eigenvalue block asymmetric by %.3e; symmetrizing",
                msg.client_id,
                asym,
            )
        lam_bar += vi * (lam + lam.T) / 2.0
    sigma = u @ lam_bar @ u.T
    sigma[np.diag_indices_from(sigma)] += sigma2
    sigma = (sigma + sigma.T) / 2.0
    if psd_clip:
        eig = sym_eig(sigma)
        clipped = np.maximum(eig.values, 0.0)
        sigma = (eig.vectors * clipped) @ eig.vectors.T
        sigma = (sigma + sigma.T) / 2.0
    return sigma
