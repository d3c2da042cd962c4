"""Quantum anomaly detection on a statevector simulator.

Submodules:

``qcore``      registers, Hadamard layers, ancilla rotations, post-selection, ideal phase estimation
``encode``     CSV ingestion, padding and amplitude encoding
``classical``  exact density / multivariate-Gaussian detectors and proximity
``density``    quantum density-estimation pipeline
``gauss``      quantum Gaussian pipeline, log-determinant and proximity estimators
``cli``        ``qad run`` / ``qad sweep`` harness
"""

from .classical import (
    DensityModel,
    GaussianModel,
    Label,
    classify_density,
    classify_gaussian,
    fit_density,
    fit_gaussian,
    log_density,
    mahalanobis,
    proximity_classical,
)
from .density import DensityQuantumReport, PrepOutcome, detect_density
from .encode import Dataset, NormedVector, amplitude_encode, build_training_superposition, load_dataset
from .gauss import (
    CovarianceOperator,
    GaussQuantumReport,
    build_covariance,
    detect_gaussian,
    estimate_log_det,
    estimate_ptest,
    g_map,
    precision_for,
    proximity_quantum,
)
from .qcore import (
    Exact,
    PhaseEstimationConfig,
    Sampled,
    SpectralDecomposition,
    StateVector,
    make_state,
)

__version__ = "0.1.0"
