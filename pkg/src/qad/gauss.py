"""Quantum multivariate-Gaussian detector, determinant estimator and proximity.

All three estimators share one pattern: ideal phase estimation of a Hermitian
operator, a rotation controlled by the rounded eigenvalue, then a measurement
of the ancilla.  The rotations used here keep every amplitude inside
``[0, 1]`` and are decoded exactly afterwards:

* inverse:      ``sqrt(1 / (kappa * lam))``, decoded by multiplying by ``kappa``;
* log:          ``sqrt(-ln(lam) / ln(kappa))``, decoded by ``-N ln(kappa)``;
* proximity:    ``sqrt(max(0, 1 - lam))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import Label, gaussian_threshold, label_gaussian
from .encode import Dataset, NormedVector
from .errors import EncodingError, RankDeficiencyError, SpectrumError
from .qcore import (
    EstimatorMode,
    Exact,
    PhaseEstimationConfig,
    PhaseOutcome,
    SpectralDecomposition,
    attach_ancilla_rotation,
    ideal_phase_estimation,
    outcome_state,
    round_eigenvalue,
    sample_expectation,
)

SPECTRUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CovarianceOperator:
    """Unit-trace covariance density operator and the trace it was divided by."""

    density: SpectralDecomposition
    trace_C: float
    mean: np.ndarray
    n_samples: int
    divisor_convention: str = "M-1"

    @property
    def dim(self) -> int:
        return self.density.dim

    def covariance(self) -> np.ndarray:
        return self.trace_C * self.density.matrix()


@dataclass(frozen=True, eq=False)
class GaussQuantumReport:
    p_test: float
    log_det: float
    threshold: float
    label: Label
    discarded_weight: float
    config: PhaseEstimationConfig
    mode: EstimatorMode
    ptest_error_bound: float

    @property
    def half_log_det(self) -> float:
        return 0.5 * self.log_det


def prepare_centered_state(x: NormedVector, mu) -> NormedVector:
    """Encode ``x - mu`` as a unit vector plus its norm."""
    mu = np.asarray(mu, dtype=complex).reshape(-1)
    raw = x.raw()
    if raw.size != mu.size:
        raise ValueError(f"vector has {raw.size} entries, mean has {mu.size}")
    try:
        return NormedVector.from_vector(raw - mu)
    except EncodingError as exc:
        raise EncodingError("test vector equals the mean; centered state is zero") from exc


def covariance_from_states(states, divisor: int) -> tuple[SpectralDecomposition, float]:
    """``sum_i scale_i^2 |z_i><z_i| / divisor`` normalized to unit trace.

    Returns the spectral decomposition of the unit-trace operator and the trace.
    """
    states = list(states)
    if not states:
        raise RankDeficiencyError("no centered states")
    units = np.array([s.unit for s in states])
    weights = np.array([s.scale**2 for s in states]) / divisor
    c = (units.T * weights) @ units.conj()
    trace = float(np.real(np.trace(c)))
    if trace <= 0.0:
        raise RankDeficiencyError("all centered states are zero")
    return SpectralDecomposition.of(c / trace), trace


def build_covariance(data: Dataset, normalize_states: bool = False) -> CovarianceOperator:
    """Covariance density operator of the genuine features, divisor ``M - 1``.

    With ``normalize_states`` every centered state enters with unit weight,
    which is the convention of the proximity measure.
    """
    x = data.genuine
    mu = x.mean(axis=0)
    states = []
    for i, row in enumerate(x):
        diff = row - mu
        norm = float(np.linalg.norm(diff))
        if norm == 0.0:
            if normalize_states:
                raise RankDeficiencyError(f"sample {i} equals the mean; its centered state is undefined")
            continue
        states.append(NormedVector(diff / norm, 1.0 if normalize_states else norm))
    density, trace = covariance_from_states(states, data.n_samples - 1)
    return CovarianceOperator(density, trace, mu, data.n_samples)


def _rotate_and_measure(outcomes: list[PhaseOutcome], amplitude, mode: EstimatorMode) -> float:
    # amplitude(lam) is the |0> amplitude for a rounded eigenvalue lam
    state = outcome_state(outcomes)
    amps = [amplitude(o.eigenvalue) for o in outcomes]
    rotated = attach_ancilla_rotation(state, "phase", lambda k: amps[k] if k < len(amps) else 0.0)
    return sample_expectation(rotated, "ancilla", 0, mode)


def estimate_ptest(
    cov: CovarianceOperator,
    z0: NormedVector,
    config: PhaseEstimationConfig,
    mode: EstimatorMode = Exact(),
) -> tuple[float, float]:
    """Estimate ``z0^T C^{-1} z0`` by conditioned inversion.

    Outcomes whose rounded eigenvalue lies below ``1/kappa`` are dropped and
    their weight returned as ``discarded_weight``.
    """
    if len(z0) != cov.dim:
        raise ValueError(f"test state has {len(z0)} entries, covariance has dimension {cov.dim}")
    outcomes = ideal_phase_estimation(cov.density, z0.unit, config)
    cutoff = 1.0 / config.kappa
    kept = [o for o in outcomes if o.eigenvalue >= cutoff and o.eigenvalue > 0.0]
    kept_weight = float(sum(o.weight for o in kept))
    discarded = float(sum(o.weight for o in outcomes)) - kept_weight
    if not kept or kept_weight < 1e-14:
        raise SpectrumError(
            f"test state lies entirely in eigenvalues below 1/kappa = {cutoff:.6g}; nothing to invert"
        )
    kappa = config.kappa
    p0 = _rotate_and_measure(kept, lambda lam: math.sqrt(1.0 / (kappa * lam)), mode)
    # kept outcomes renormalize inside outcome_state; undo that with their total weight
    p_test = kappa * p0 * kept_weight * z0.scale**2 / cov.trace_C
    return float(p_test), min(max(discarded, 0.0), 1.0)


def maximally_entangled_weights(op: SpectralDecomposition) -> np.ndarray:
    """Eigenvector weights seen by one half of ``sum_k |k>|k> / sqrt(N)``."""
    n = op.dim
    phi = np.eye(n, dtype=complex) / math.sqrt(n)
    # weight_j = || (<u_j| (x) I) |phi> ||^2
    proj = op.eigenvectors.conj().T @ phi
    return np.sum(np.abs(proj) ** 2, axis=1)


def estimate_log_det(
    op: SpectralDecomposition,
    config: PhaseEstimationConfig,
    mode: EstimatorMode = Exact(),
) -> float:
    """Estimate ``sum_i ln(lam_i)`` for an operator with spectrum in ``[1/kappa, 1]``.

    Every eigenvector receives weight ``1/N`` from a maximally entangled input.
    Each rounded eigenvalue is clamped back into ``[1/kappa, 1]`` before the
    rotation ``sqrt(-ln(lam) / ln(kappa))``.
    """
    kappa = float(config.kappa)
    vals = op.eigenvalues
    lo = 1.0 / kappa
    if np.any(vals < lo - SPECTRUM_TOL) or np.any(vals > 1.0 + SPECTRUM_TOL):
        raise SpectrumError(
            f"log-determinant needs eigenvalues in [1/kappa, 1] = [{lo:.6g}, 1]; got "
            f"[{vals.min():.6g}, {vals.max():.6g}]"
        )
    n = op.dim
    weights = maximally_entangled_weights(op)
    merged: dict[float, float] = {}
    for lam, w in zip(vals, weights):
        key = min(max(round_eigenvalue(min(max(lam, 0.0), 1.0), config.bits), lo), 1.0)
        merged[key] = merged.get(key, 0.0) + w
    if kappa == 1.0:
        # the only admissible spectrum is all ones
        return 0.0
    outcomes = [PhaseOutcome(lam, w, k) for k, (lam, w) in enumerate(merged.items())]
    log_kappa = math.log(kappa)
    p0 = _rotate_and_measure(
        outcomes, lambda lam: math.sqrt(min(1.0, max(0.0, -math.log(lam) / log_kappa))), mode
    )
    return -n * log_kappa * p0


def scale_to_unit_interval(matrix) -> tuple[SpectralDecomposition, float, float]:
    """Rescale a positive-definite matrix so its largest eigenvalue is one.

    Returns ``(op, log_scale, kappa)`` where ``op`` is ``s * B``,
    ``log_scale = ln s`` and ``kappa`` is the condition number.  Recover
    ``ln|B| = estimate - N * log_scale``.
    """
    op = SpectralDecomposition.of(matrix)
    top, bottom = float(op.eigenvalues[0]), float(op.eigenvalues[-1])
    if bottom <= 0.0:
        raise SpectrumError(f"matrix is not positive definite (smallest eigenvalue {bottom:.3e})")
    s = 1.0 / top
    return op.scaled(s), math.log(s), top / bottom


def precision_for(target_error: float, kappa: float) -> int:
    """Phase-estimation bits for accuracy ``delta = target_error / (2 kappa^2)``."""
    if not target_error > 0:
        raise ValueError(f"target error must be positive, got {target_error}")
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    delta = target_error / (2.0 * kappa**2)
    return max(1, math.ceil(math.log2(1.0 / delta)))


def g_map(lam: float) -> tuple[float, float]:
    """The unnormalized pair ``(ln lam, sqrt(1 - 2 ln lam))``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    log_lam = math.log(lam)
    return log_lam, math.sqrt(1.0 - 2.0 * log_lam)


def ptest_error_bound(scale: float, trace_C: float, config: PhaseEstimationConfig) -> float:
    """A-priori rounding error of ``estimate_ptest`` when the spectrum sits in ``[1/kappa, 1]``.

    ``|1/lam~ - 1/lam| <= kappa^2 2^{-bits-1}`` for both values above ``1/kappa``.
    """
    return scale**2 / trace_C * config.kappa**2 * 2.0 ** (-config.bits - 1)


def detect_gaussian(
    data: Dataset,
    x0: NormedVector,
    epsilon: float,
    config: PhaseEstimationConfig,
    mode: EstimatorMode = Exact(),
) -> GaussQuantumReport:
    """Multivariate-Gaussian test: anomalous iff ``p_test > threshold``.

    ``ln|C| = sum_i ln lam_i(C / tr C) + d ln tr C``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    cov = build_covariance(data)
    x = x0.real()
    if x.size == data.d_padded:
        x = x[data.feature_mask]
    z0 = None
    if np.any(x - cov.mean):
        z0 = prepare_centered_state(NormedVector.from_vector(x), cov.mean)
    if z0 is None:
        p_test, discarded, bound = 0.0, 0.0, 0.0
    else:
        p_test, discarded = estimate_ptest(cov, z0, config, mode.child(0))
        bound = ptest_error_bound(z0.scale, cov.trace_C, config)
    try:
        sum_log = estimate_log_det(cov.density, config, mode.child(1))
    except SpectrumError as exc:
        raise SpectrumError(f"covariance spectrum does not fit kappa={config.kappa}: {exc}") from exc
    d = cov.dim
    log_det = sum_log + d * math.log(cov.trace_C)
    threshold = gaussian_threshold(d, log_det, epsilon)
    return GaussQuantumReport(
        p_test=p_test,
        log_det=log_det,
        threshold=threshold,
        label=label_gaussian(p_test, threshold),
        discarded_weight=discarded,
        config=config,
        mode=mode,
        ptest_error_bound=bound,
    )


def proximity_quantum(
    cov: CovarianceOperator,
    z0: NormedVector,
    config: PhaseEstimationConfig,
    mode: EstimatorMode = Exact(),
) -> float:
    """Estimate ``<z0| I - C |z0>`` with negative contributions clamped to zero.

    Eigenvalues of ``C`` are obtained as rounded eigenvalues of the unit-trace
    operator times ``tr C``.
    """
    if len(z0) != cov.dim:
        raise ValueError(f"test state has {len(z0)} entries, covariance has dimension {cov.dim}")
    outcomes = ideal_phase_estimation(cov.density, z0.unit, config)
    trace = cov.trace_C
    return _rotate_and_measure(outcomes, lambda lam: math.sqrt(max(0.0, 1.0 - lam * trace)), mode)


__all__ = [
    "CovarianceOperator",
    "GaussQuantumReport",
    "build_covariance",
    "covariance_from_states",
    "detect_gaussian",
    "estimate_log_det",
    "estimate_ptest",
    "g_map",
    "maximally_entangled_weights",
    "precision_for",
    "prepare_centered_state",
    "proximity_quantum",
    "ptest_error_bound",
    "scale_to_unit_interval",
]
