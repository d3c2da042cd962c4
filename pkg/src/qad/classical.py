"""Exact classical detectors used as ground truth for the quantum estimators.

Two detectors are provided: a per-feature (diagonal) Gaussian density model
and a full multivariate Gaussian.  Both operate on the genuine (non-padded)
columns of a :class:`~qad.encode.Dataset`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .encode import Dataset
from .errors import DegenerateFeatureError, RankDeficiencyError

VARIANCE_FLOOR = 1e-12
# Relative band inside which a score counts as sitting exactly on the threshold.
TIE_RTOL = 1e-12
LOG_2PI = math.log(2.0 * math.pi)


class Label(str, enum.Enum):
    NORMAL = "normal"
    ANOMALY = "anomaly"


def _genuine(x, d: int, mask: np.ndarray | None) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == d:
        return x
    if mask is not None and x.size == mask.size:
        return x[mask]
    raise ValueError(f"vector has {x.size} entries, model expects {d}")


def _is_tie(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class DensityModel:
    mu: np.ndarray
    sigma2: np.ndarray
    feature_mask: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.mu.size


def fit_density(data: Dataset, variance_floor: float = VARIANCE_FLOOR) -> DensityModel:
    """Per-feature means and population variances (divisor ``M``)."""
    x = data.genuine
    mu = x.mean(axis=0)
    sigma2 = np.mean((x - mu) ** 2, axis=0)
    bad = np.flatnonzero(sigma2 < variance_floor)
    if bad.size:
        col = int(bad[0])
        raise DegenerateFeatureError(
            f"feature column {col} has variance {sigma2[col]:.3e} below floor {variance_floor:.0e}",
            column=col,
        )
    return DensityModel(mu, sigma2, data.feature_mask)


def log_density(model: DensityModel, x) -> float:
    """Natural log of the product of independent per-feature normal densities."""
    x = _genuine(x, model.d, model.feature_mask)
    return float(
        -0.5 * model.d * LOG_2PI
        - 0.5 * np.sum(np.log(model.sigma2))
        - np.sum((x - model.mu) ** 2 / (2.0 * model.sigma2))
    )


def classify_density(model: DensityModel, x, epsilon: float) -> tuple[Label, float]:
    """Flag ``x`` when ``p(x) < epsilon``; exact ties are normal."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    score = log_density(model, x)
    return label_density(score, epsilon), score


def label_density(log_p: float, epsilon: float) -> Label:
    threshold = math.log(epsilon)
    if log_p < threshold and not _is_tie(log_p, threshold):
        return Label.ANOMALY
    return Label.NORMAL


@dataclass(frozen=True, eq=False)
class GaussianModel:
    mu: np.ndarray
    C: np.ndarray
    logdet: float
    trace: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    feature_mask: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.mu.size


def covariance_divisor(m: int, divisor: str) -> int:
    if divisor == "M":
        return m
    if divisor == "M-1":
        return m - 1
    raise ValueError(f"divisor must be 'M' or 'M-1', got {divisor!r}")


def fit_gaussian(
    data: Dataset, divisor: str = "M", eigen_floor: float = VARIANCE_FLOOR
) -> GaussianModel:
    """Mean and covariance of the genuine features.

    ``divisor="M"`` is the maximum-likelihood estimate; ``"M-1"`` matches the
    covariance density operator used by the quantum pipeline.
    """
    x = data.genuine
    mu = x.mean(axis=0)
    z = x - mu
    c = z.T @ z / covariance_divisor(x.shape[0], divisor)
    c = (c + c.T) / 2
    vals, vecs = np.linalg.eigh(c)
    if vals[0] < eigen_floor:
        raise RankDeficiencyError(
            f"covariance is singular: smallest eigenvalue {vals[0]:.3e} below floor {eigen_floor:.0e}"
        )
    return GaussianModel(
        mu, c, float(np.sum(np.log(vals))), float(np.trace(c)), vals, vecs, data.feature_mask
    )


def mahalanobis(model: GaussianModel, x) -> float:
    """``(x - mu)^T C^{-1} (x - mu)`` evaluated in the eigenbasis of ``C``."""
    x = _genuine(x, model.d, model.feature_mask)
    if model.eigenvalues[0] < VARIANCE_FLOOR:
        raise RankDeficiencyError("covariance is singular")
    proj = model.eigenvectors.T @ (x - model.mu)
    return float(np.sum(proj**2 / np.maximum(model.eigenvalues, VARIANCE_FLOOR)))


def gaussian_threshold(d: int, logdet: float, epsilon: float) -> float:
    """Mahalanobis value at which the multivariate density equals ``epsilon``."""
    return -d * LOG_2PI - logdet - 2.0 * math.log(epsilon)


def label_gaussian(p_test: float, threshold: float) -> Label:
    if p_test > threshold and not _is_tie(p_test, threshold):
        return Label.ANOMALY
    return Label.NORMAL


def classify_gaussian(model: GaussianModel, x, epsilon: float) -> tuple[Label, float, float]:
    """Return ``(label, p_test, threshold)``; anomalous iff ``p_test > threshold``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    p_test = mahalanobis(model, x)
    threshold = gaussian_threshold(model.d, model.logdet, epsilon)
    return label_gaussian(p_test, threshold), p_test, threshold


def unit_centered_states(data: Dataset) -> np.ndarray:
    """Rows ``(x^i - mu) / ||x^i - mu||`` over the genuine features."""
    x = data.genuine
    z = x - x.mean(axis=0)
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0.0):
        raise RankDeficiencyError(
            f"sample {int(np.flatnonzero(norms == 0.0)[0])} equals the mean; its centered state is undefined"
        )
    return z / norms[:, None]


def proximity_classical(data: Dataset, z0) -> float:
    """``<z0| I - C |z0>`` with ``C = sum_i |z^i><z^i| / (M-1)`` over unit centered states.

    Eigen-directions of ``C`` with eigenvalue above one contribute zero rather
    than a negative amount, keeping the result in ``[0, 1]``.
    """
    z = unit_centered_states(data)
    c = z.T @ z / (data.n_samples - 1)
    z0 = _genuine(z0, data.n_features, data.feature_mask)
    vals, vecs = np.linalg.eigh((c + c.T) / 2)
    beta2 = np.abs(vecs.T @ z0) ** 2
    return float(np.sum(beta2 * np.maximum(0.0, 1.0 - vals)))
