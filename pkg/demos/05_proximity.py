"""
Proximity to the training subspace
==================================

With unit centered training states, <z0| I - C |z0> is close to zero for a
test direction the data already covers and close to one for a new direction.
Eigenvalues of C above one are clamped so the score stays in [0, 1].
"""

import numpy as np

from qad.classical import proximity_classical
from qad.encode import Dataset, NormedVector
from qad.gauss import build_covariance, proximity_quantum
from qad.qcore import PhaseEstimationConfig

rng = np.random.default_rng(5)
# training data spread mostly along the first axis
x = rng.normal(size=(8, 3)) * [3.0, 0.3, 0.05]
data = Dataset.from_array(x, normalize_rows=False)
cov = build_covariance(data, normalize_states=True)
print("eigenvalues of C:", (cov.density.eigenvalues * cov.trace_C).round(4))

config = PhaseEstimationConfig(40)
for name, direction in [("along the data", [1.0, 0.0, 0.0]), ("across it", [0.0, 0.0, 1.0])]:
    z0 = NormedVector.from_vector(direction)
    f_q = proximity_quantum(cov, z0, config)
    f_c = proximity_classical(data, np.asarray(direction))
    print(f"{name:>15}: quantum {f_q:.9f}  classical {f_c:.9f}")
