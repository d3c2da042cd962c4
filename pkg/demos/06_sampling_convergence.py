"""
Shot noise and the square-root law
==================================

Runs the command-line sweep over shot counts for several seeds and fits the
slope of the RMS error on a log-log scale.  Binomial estimation predicts a
slope of -1/2.
"""

import tempfile
from pathlib import Path

import numpy as np

from qad.cli import RunConfig, run, sweep

rng = np.random.default_rng(6)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "train.csv"
    np.savetxt(path, rng.normal(size=(4, 4)), delimiter=",", fmt="%.17g")

    exact = run(RunConfig("density", str(path), "0", 0.1)).quantum_score
    shots = [100, 1000, 10_000, 100_000]
    errors = []
    for seed in range(0, 20_000, 1000):
        config = RunConfig("density", str(path), "0", 0.1, mode="sampled", shots=100, seed=seed)
        table = sweep(config, "shots", shots).strip().splitlines()[1:]
        errors.append([abs(float(row.split(",")[2]) - exact) for row in table])

rms = np.sqrt(np.mean(np.square(errors), axis=0))
for s, e in zip(shots, rms):
    print(f"{s:>7} shots: RMS error {e:.3e}")
print("log-log slope:", round(float(np.polyfit(np.log10(shots), np.log10(rms), 1)[0]), 3))
