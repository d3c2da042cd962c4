"""
Registers, Hadamards and post-selection
=======================================

A tour of the statevector layer: build a training superposition, apply a
Hadamard to the index register and post-select on index 0.  The surviving
branch is the mean of the training rows.
"""

import numpy as np

from qad.encode import Dataset, build_training_superposition
from qad.qcore import attach_ancilla_rotation, hadamard_register, marginal_probabilities, postselect

rng = np.random.default_rng(0)
data = Dataset.from_array(rng.normal(size=(4, 4)))  # rows are normalized on load

# sum_i |x^i>|i> / sqrt(M); the first register is the most significant
state = build_training_superposition(data)
print("layout:", state.layout)
print("probability per index:", marginal_probabilities(state, "index").round(6))

# H on the index register, keep outcome 0
mixed = hadamard_register(state, "index")
branch, p = postselect(mixed, "index", 0)
mean = data.rows.mean(axis=0)
print("success probability:", round(p, 12), "=  |mean|^2 =", round(float(mean @ mean), 12))
print("branch equals normalized mean:", np.allclose(branch.amplitudes, mean / np.linalg.norm(mean)))

# a controlled rotation writes f(k)|0> + sqrt(1 - f(k)^2)|1> next to each basis state k
rotated = attach_ancilla_rotation(branch, "feature", lambda k: 0.5)
print("P(ancilla = 0):", marginal_probabilities(rotated, "ancilla")[0])  # 0.25 for any state
