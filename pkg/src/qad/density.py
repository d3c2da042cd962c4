"""Quantum density-estimation detector.

The pipeline prepares three states by Hadamard interference and
post-selection, reads per-feature norms off them, and estimates the two sums
that make up the log-density with ancilla rotations:

* the mean state, from the training superposition with the index register
  Hadamard-transformed and post-selected on ``|0...0>``;
* the difference state ``sum_ij (x^i_j - mu_j)|i>|j>``, from a flag qubit
  interfering training rows with the mean;
* the test difference state ``sum_ij (x^0_j - mu_j)|i>|j>``, built the same way.

Every prepared state carries ``scale``, the norm of the unnormalized vector it
represents, so decoded quantities use the ``1/M`` mean of the classical model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classical import LOG_2PI, VARIANCE_FLOOR, Label, label_density
from .encode import Dataset, NormedVector, build_training_superposition, is_power_of_two, log2_int
from .errors import DegenerateFeatureError, EncodingError, PostselectionError, SpectrumError
from .qcore import (
    EstimatorMode,
    Exact,
    StateVector,
    attach_ancilla_rotation,
    hadamard_register,
    make_state,
    marginal_probabilities,
    postselect,
    sample_expectation,
)


@dataclass(frozen=True, eq=False)
class PrepOutcome:
    """A post-selected state and the bookkeeping needed to decode it."""

    state: StateVector
    success_probability: float
    scale: float
    feature_mask: np.ndarray = field(repr=False)

    @property
    def n_samples(self) -> int:
        return self.state.dim("index") if "index" in self.state.registers else 1

    def feature_norms2(self) -> np.ndarray:
        """Squared norm of each unnormalized ``|chi_j>`` block."""
        return self.scale**2 * marginal_probabilities(self.state, "feature")


@dataclass(frozen=True, eq=False)
class DensityQuantumReport:
    m1: float
    m2: float
    log_p: float
    label: Label
    prep: tuple[PrepOutcome, ...]
    mode: EstimatorMode
    n_features: int
    bounds: tuple[float, float]

    @property
    def success_probabilities(self) -> dict[str, float]:
        names = ("mean", "difference", "test_difference")
        return {n: p.success_probability for n, p in zip(names, self.prep)}


def _require_unit_rows(data: Dataset):
    if not data.has_unit_rows():
        raise EncodingError(
            "the quantum density pipeline needs unit-norm rows; load the data with normalize_rows=True"
        )


def prepare_mean_state(data: Dataset) -> PrepOutcome:
    """Post-select the Hadamard-transformed index register on ``|0...0>``.

    The surviving feature amplitudes are ``(1/M) sum_i x^i_j``, the classical
    mean, so the success probability is ``||mu||^2 = (1/M^2) sum_kl <x^k|x^l>``.
    """
    _require_unit_rows(data)
    psi = hadamard_register(build_training_superposition(data), "index")
    try:
        state, prob = postselect(psi, "index", 0)
    except PostselectionError as exc:
        raise PostselectionError(f"training states cancel; the mean state is empty ({exc})") from exc
    return PrepOutcome(state, prob, math.sqrt(prob), data.feature_mask)


def mean_vector(mean: PrepOutcome) -> np.ndarray:
    """Classical mean recovered from the mean state and its scale."""
    return mean.scale * mean.state.amplitudes


def _interfere(branch0: np.ndarray, branch1: np.ndarray, mask: np.ndarray, what: str) -> PrepOutcome:
    # (|0>|a> + |1>|b>) / norm, Hadamard on the flag, keep flag = 1: (a - b) / (sqrt(2) norm)
    m, d = branch0.shape
    norm2 = float(np.sum(np.abs(branch0) ** 2) + np.sum(np.abs(branch1) ** 2))
    layout = [("flag", 1), ("index", log2_int(m)), ("feature", log2_int(d))]
    psi = make_state(np.stack([branch0, branch1]), layout)
    try:
        state, prob = postselect(hadamard_register(psi, "flag"), "flag", 1)
    except PostselectionError as exc:
        raise PostselectionError(f"{what} branch is empty ({exc})") from exc
    return PrepOutcome(state, prob, math.sqrt(2.0 * norm2 * prob), mask)


def prepare_difference_state(data: Dataset, mean: PrepOutcome) -> PrepOutcome:
    """State proportional to ``sum_ij (x^i_j - mu_j)|i>|j>``.

    ``||chi_j||^2 = M sigma_j^2`` is recovered as ``scale^2`` times the
    marginal probability of feature ``j``.
    """
    _require_unit_rows(data)
    mu = mean_vector(mean)
    if mu.size != data.d_padded:
        raise ValueError("mean state does not match the dataset's feature register")
    m = data.n_samples
    if not is_power_of_two(m):
        raise EncodingError(f"M must be a power of two, got {m}")
    rows = data.rows.astype(complex)
    return _interfere(rows, np.tile(mu, (m, 1)), data.feature_mask, "difference")


def prepare_test_difference_state(x0: NormedVector, mean: PrepOutcome, M: int) -> PrepOutcome:
    """State proportional to ``sum_ij (x^0_j - mu_j)|i>|j>`` with ``M`` index values."""
    mu = mean_vector(mean)
    x = x0.raw()
    if x.size != mu.size:
        raise ValueError(f"test vector has {x.size} entries, mean state has {mu.size}")
    if not is_power_of_two(M):
        raise EncodingError(f"M must be a power of two, got {M}")
    return _interfere(np.tile(x, (M, 1)), np.tile(mu, (M, 1)), mean.feature_mask, "test difference")


def _uniform_feature_state(d_padded: int) -> StateVector:
    return make_state(np.ones(d_padded), [("feature", log2_int(d_padded))])


def _sigma2(chi: PrepOutcome) -> np.ndarray:
    sigma2 = chi.feature_norms2()[chi.feature_mask] / chi.n_samples
    bad = np.flatnonzero(sigma2 < VARIANCE_FLOOR)
    if bad.size:
        col = int(bad[0])
        raise DegenerateFeatureError(
            f"feature column {col} has variance {sigma2[col]:.3e} below floor {VARIANCE_FLOOR:.0e}",
            column=col,
        )
    return sigma2


def feature_ratios(chi: PrepOutcome, chi0: PrepOutcome) -> np.ndarray:
    """``||chi^0_j|| / ||chi_j|| = |x^0_j - mu_j| / sigma_j`` for every padded feature (zero on padding)."""
    _sigma2(chi)
    mask = chi.feature_mask
    ratios = np.zeros(mask.size)
    ratios[mask] = np.sqrt(chi0.feature_norms2()[mask] / chi.feature_norms2()[mask])
    return ratios


def estimate_m1(
    chi: PrepOutcome,
    chi0: PrepOutcome | None,
    mode: EstimatorMode = Exact(),
    margin: float = 1.0,
) -> float:
    """Estimate ``sum_j (x^0_j - mu_j)^2 / sigma_j^2``.

    Ratios are divided by ``r = margin * max_j ratio_j`` so the rotation
    amplitude stays in ``[0, 1]``; the ancilla ``|0>`` probability over a
    uniform feature register is then rescaled by ``d_padded * r^2``.
    ``chi0=None`` stands for a test point equal to the mean.
    """
    if chi0 is None:
        _sigma2(chi)
        return 0.0
    ratios = feature_ratios(chi, chi0)
    r = float(ratios.max()) * margin
    if r == 0.0:
        return 0.0
    d_padded = ratios.size
    state = attach_ancilla_rotation(_uniform_feature_state(d_padded), "feature", lambda j: ratios[j] / r)
    p0 = sample_expectation(state, "ancilla", 0, mode)
    return d_padded * r**2 * p0


def default_log_sigma_bounds(chi: PrepOutcome) -> tuple[float, float]:
    """Exact range of ``ln sigma_j``, widened by one when all features agree."""
    log_sigma = 0.5 * np.log(_sigma2(chi))
    lo, hi = float(log_sigma.min()), float(log_sigma.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def estimate_m2(
    chi: PrepOutcome,
    mode: EstimatorMode = Exact(),
    bounds: tuple[float, float] | None = None,
) -> float:
    """Estimate ``sum_j ln sigma_j``.

    ``ln sigma_j`` is mapped affinely onto ``s_j in [0, 1]`` using ``bounds``
    and loaded as rotation amplitude ``sqrt(s_j)``; the decoded value is
    ``d_padded (hi - lo) P(0) + d lo``.
    """
    log_sigma = 0.5 * np.log(_sigma2(chi))
    lo, hi = default_log_sigma_bounds(chi) if bounds is None else map(float, bounds)
    if not lo < hi:
        raise ValueError(f"bounds must satisfy lo < hi, got ({lo}, {hi})")
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    outside = np.flatnonzero((log_sigma < lo - tol) | (log_sigma > hi + tol))
    if outside.size:
        j = int(outside[0])
        raise SpectrumError(f"ln sigma_{j} = {log_sigma[j]:.6g} outside bounds ({lo}, {hi})")

    mask = chi.feature_mask
    s = np.zeros(mask.size)
    s[mask] = np.clip((log_sigma - lo) / (hi - lo), 0.0, 1.0)
    state = attach_ancilla_rotation(_uniform_feature_state(mask.size), "feature", lambda j: math.sqrt(s[j]))
    p0 = sample_expectation(state, "ancilla", 0, mode)
    return mask.size * (hi - lo) * p0 + int(mask.sum()) * lo


def detect_density(
    data: Dataset,
    x0: NormedVector,
    epsilon: float,
    mode: EstimatorMode = Exact(),
    bounds: tuple[float, float] | None = None,
) -> DensityQuantumReport:
    """Run the full density pipeline on test vector ``x0``.

    The label is anomalous when the estimated ``ln p(x0) < ln epsilon``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    mean = prepare_mean_state(data)
    chi = prepare_difference_state(data, mean)
    if len(x0) != data.d_padded:
        x0 = NormedVector.from_vector(data.pad(x0.real()))
    try:
        chi0 = prepare_test_difference_state(x0, mean, data.n_samples)
    except PostselectionError:
        # test point coincides with the mean: the Mahalanobis-like term is zero
        chi0 = None
    if bounds is None:
        bounds = default_log_sigma_bounds(chi)
    m1 = estimate_m1(chi, chi0, mode.child(0))
    # the report keeps the doubled log-sigma sum so that log p = -(d/2) ln 2pi - (m1 + m2) / 2
    m2 = 2.0 * estimate_m2(chi, mode.child(1), bounds)
    d = data.n_features
    log_p = -0.5 * d * LOG_2PI - 0.5 * (m1 + m2)
    prep = (mean, chi) if chi0 is None else (mean, chi, chi0)
    return DensityQuantumReport(
        m1=m1,
        m2=m2,
        log_p=log_p,
        label=label_density(log_p, epsilon),
        prep=prep,
        mode=mode,
        n_features=d,
        bounds=(float(bounds[0]), float(bounds[1])),
    )
