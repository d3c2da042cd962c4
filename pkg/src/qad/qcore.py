"""Value-semantic statevector simulator.

A :class:`StateVector` is an immutable complex amplitude vector together with an
ordered register layout.  The first register in the layout is the most
significant one, so the amplitude array reshapes to ``(2**q_0, 2**q_1, ...)``.
Every operation returns a new state; nothing is modified in place.

Phase estimation is simulated ideally: the operator is diagonalised exactly and
each eigenvalue is rounded to ``bits`` binary digits, with no spectral leakage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import hadamard

from .errors import PostselectionError, RegisterError, RotationError, SpectrumError

NORM_TOL = 1e-12
POSTSELECT_FLOOR = 1e-14

Layout = tuple[tuple[str, int], ...]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitudes over a named multi-register layout."""

    amplitudes: np.ndarray
    layout: Layout

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "layout", tuple((str(n), int(q)) for n, q in self.layout))

    @property
    def num_qubits(self) -> int:
        return sum(q for _, q in self.layout)

    @property
    def registers(self) -> list[str]:
        return [name for name, _ in self.layout]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2**q for _, q in self.layout)

    def axis(self, register: str) -> int:
        for k, (name, _) in enumerate(self.layout):
            if name == register:
                return k
        raise RegisterError(f"unknown register {register!r}; layout has {self.registers}")

    def dim(self, register: str) -> int:
        return self.shape[self.axis(register)]

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _validate_layout(layout: Sequence[tuple[str, int]]) -> Layout:
    names = [name for name, _ in layout]
    if len(set(names)) != len(names):
        raise RegisterError(f"duplicate register names in layout {names}")
    for name, q in layout:
        if int(q) < 0:
            raise RegisterError(f"register {name!r} has negative qubit count {q}")
    return tuple((str(n), int(q)) for n, q in layout)


def make_state(amplitudes, layout: Sequence[tuple[str, int]]) -> StateVector:
    """Build a state from (unnormalized) amplitudes.

    Raises:
        RegisterError: if the amplitude count does not match ``layout`` or
            the amplitudes are all zero.
    """
    layout = _validate_layout(layout)
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    expected = 2 ** sum(q for _, q in layout)
    if amps.size != expected:
        raise RegisterError(
            f"{amps.size} amplitudes do not match layout {list(layout)} "
            f"({expected} expected)"
        )
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise RegisterError("cannot build a state from the zero vector")
    return StateVector(amps / norm, layout)


def _from_tensor(tensor: np.ndarray, layout: Layout) -> StateVector:
    # Re-normalise to keep the 1e-12 norm invariant against accumulated round-off.
    amps = tensor.reshape(-1)
    return StateVector(amps / np.linalg.norm(amps), layout)


def _apply_on_axis(tensor: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def hadamard_register(state: StateVector, register: str) -> StateVector:
    """Apply a Hadamard gate to every qubit of ``register``.

    Sylvester ordering of :func:`scipy.linalg.hadamard` gives exactly the
    ``(-1)**popcount(i & j)`` sign pattern of ``H^{(x)k}``.
    """
    axis = state.axis(register)
    dim = state.shape[axis]
    h = hadamard(dim).astype(complex) / np.sqrt(dim) if dim > 1 else np.ones((1, 1), complex)
    return _from_tensor(_apply_on_axis(state.tensor(), h, axis), state.layout)


def attach_ancilla_rotation(
    state: StateVector,
    register: str,
    amplitude_fn: Callable[[int], float],
    ancilla: str = "ancilla",
) -> StateVector:
    """Append a one-qubit ancilla rotated conditionally on ``register``.

    Each component ``a_j |j>`` becomes ``a_j |j> (f(j)|0> + sqrt(1 - f(j)**2)|1>)``.
    The ancilla is appended as the least significant register.
    """
    axis = state.axis(register)
    if ancilla in state.registers:
        raise RegisterError(f"register {ancilla!r} already exists")
    tensor = state.tensor()
    # Which basis values of the control register carry any amplitude.
    other = tuple(k for k in range(tensor.ndim) if k != axis)
    populated = np.sum(np.abs(tensor) ** 2, axis=other) > 0.0

    dim = state.shape[axis]
    f = np.zeros(dim)
    for j in range(dim):
        value = float(amplitude_fn(j))
        if populated[j] and (not np.isfinite(value) or abs(value) > 1.0 + NORM_TOL):
            raise RotationError(
                f"rotation amplitude f({j}) = {value!r} outside [-1, 1]", index=j
            )
        f[j] = np.clip(value, -1.0, 1.0) if np.isfinite(value) else 0.0
    g = np.sqrt(np.clip(1.0 - f**2, 0.0, None))

    bshape = [1] * tensor.ndim
    bshape[axis] = dim
    joint = np.stack(
        [tensor * f.reshape(bshape), tensor * g.reshape(bshape)], axis=-1
    )
    return _from_tensor(joint, state.layout + ((ancilla, 1),))


def marginal_probabilities(state: StateVector, register: str) -> np.ndarray:
    """Born probabilities of every basis outcome of ``register``."""
    axis = state.axis(register)
    probs = np.abs(state.tensor()) ** 2
    other = tuple(k for k in range(probs.ndim) if k != axis)
    return np.sum(probs, axis=other)


def _check_outcome(state: StateVector, register: str, outcome: int) -> int:
    dim = state.dim(register)
    if not 0 <= int(outcome) < dim:
        raise RegisterError(f"outcome {outcome} invalid for register {register!r} of size {dim}")
    return int(outcome)


def postselect(state: StateVector, register: str, outcome: int) -> tuple[StateVector, float]:
    """Project ``register`` onto ``outcome`` and drop it from the layout.

    Returns the renormalized remainder and the pre-projection probability.
    """
    outcome = _check_outcome(state, register, outcome)
    axis = state.axis(register)
    branch = np.take(state.tensor(), outcome, axis=axis)
    prob = float(np.sum(np.abs(branch) ** 2))
    if prob < POSTSELECT_FLOOR:
        raise PostselectionError(
            f"post-selecting {register!r}={outcome} has probability {prob:.3e}"
        )
    layout = tuple(entry for k, entry in enumerate(state.layout) if k != axis)
    return _from_tensor(branch, layout), prob


def expectation(state: StateVector, register: str, outcome: int) -> float:
    """Exact probability of measuring ``outcome`` on ``register``."""
    outcome = _check_outcome(state, register, outcome)
    return float(marginal_probabilities(state, register)[outcome])


@dataclass(frozen=True)
class Exact:
    """Read measurement probabilities directly from the amplitudes."""

    def child(self, key: int) -> "Exact":
        return self

    def describe(self) -> dict:
        return {"kind": "exact"}


@dataclass(frozen=True)
class Sampled:
    """Estimate probabilities from ``shots`` simulated measurements.

    ``stream`` is a spawn key; :meth:`child` derives independent, reproducible
    sub-streams for the separate measurements of one pipeline run.
    """

    shots: int
    seed: int = 0
    stream: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if int(self.shots) < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def child(self, key: int) -> "Sampled":
        return Sampled(self.shots, self.seed, self.stream + (int(key),))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.seed), spawn_key=self.stream))

    def describe(self) -> dict:
        return {"kind": "sampled", "shots": int(self.shots), "seed": int(self.seed)}


EstimatorMode = Exact | Sampled


def sample_expectation(
    state: StateVector, register: str, outcome: int, mode: EstimatorMode
) -> float:
    """Measurement estimate of :func:`expectation` under ``mode``."""
    p = expectation(state, register, outcome)
    if isinstance(mode, Exact):
        return p
    p = min(max(p, 0.0), 1.0)
    count = mode.generator().binomial(mode.shots, p)
    return count / mode.shots


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigen-decomposition of a Hermitian operator, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=float).reshape(-1)
        vecs = np.array(self.eigenvectors, dtype=complex)
        if vecs.shape != (vals.size, vals.size):
            raise ValueError(f"eigenvector matrix shape {vecs.shape} does not match {vals.size} eigenvalues")
        order = np.argsort(-vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    @classmethod
    def of(cls, matrix, hermitian_tol: float = 1e-10) -> "SpectralDecomposition":
        a = np.asarray(matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if np.max(np.abs(a - a.conj().T), initial=0.0) > hermitian_tol:
            raise ValueError("matrix is not Hermitian")
        vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
        return cls(vals, vecs)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def scaled(self, factor: float) -> "SpectralDecomposition":
        return SpectralDecomposition(self.eigenvalues * factor, self.eigenvectors)


@dataclass(frozen=True)
class PhaseEstimationConfig:
    """Phase-estimation register width and effective condition number."""

    bits: int
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.bits) < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if not self.kappa >= 1.0:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")

    @property
    def resolution(self) -> float:
        return 2.0 ** -int(self.bits)


class PhaseOutcome(NamedTuple):
    eigenvalue: float
    weight: float
    index: int


def round_eigenvalue(value: float, bits: int) -> float:
    scale = 2.0 ** int(bits)
    return float(np.rint(value * scale) / scale)


def ideal_phase_estimation(
    op: SpectralDecomposition, vector, config: PhaseEstimationConfig
) -> list[PhaseOutcome]:
    """Distribution of ideal ``bits``-bit phase-estimation outcomes.

    Eigenvectors whose rounded eigenvalues coincide are merged (their weights
    summed); ``index`` is the first eigenvector of each group.
    """
    vals = op.eigenvalues
    if np.any(vals < -NORM_TOL) or np.any(vals > 1.0 + NORM_TOL):
        raise SpectrumError(
            f"phase estimation needs eigenvalues in [0, 1]; got range "
            f"[{vals.min():.6g}, {vals.max():.6g}]"
        )
    psi = np.asarray(vector, dtype=complex).reshape(-1)
    if psi.size != op.dim:
        raise ValueError(f"input dimension {psi.size} does not match operator dimension {op.dim}")
    beta = op.eigenvectors.conj().T @ psi
    weights = np.abs(beta) ** 2
    total = weights.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"input vector is not normalized (norm^2 = {total!r})")

    merged: dict[float, list] = {}
    for k, lam in enumerate(np.clip(vals, 0.0, 1.0)):
        key = round_eigenvalue(lam, config.bits)
        if key in merged:
            merged[key][0] += weights[k]
        else:
            merged[key] = [weights[k], k]
    return [PhaseOutcome(lam, float(w), idx) for lam, (w, idx) in merged.items()]


def outcome_state(outcomes: Sequence[PhaseOutcome], register: str = "phase") -> StateVector:
    """State with amplitude ``sqrt(weight)`` on each phase-estimation outcome.

    This is the eigenvalue-register marginal after the rotation's controlling
    step; the register is padded with zero amplitudes up to a power of two.
    """
    n = len(outcomes)
    qubits = max(0, int(np.ceil(np.log2(n)))) if n > 1 else 0
    amps = np.zeros(2**qubits)
    amps[:n] = np.sqrt([o.weight for o in outcomes])
    return make_state(amps, [(register, qubits)])
