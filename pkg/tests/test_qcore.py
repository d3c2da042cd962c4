import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qad.errors import PostselectionError, RegisterError, RotationError, SpectrumError
from qad.qcore import (
    Exact,
    PhaseEstimationConfig,
    Sampled,
    SpectralDecomposition,
    attach_ancilla_rotation,
    expectation,
    hadamard_register,
    ideal_phase_estimation,
    make_state,
    marginal_probabilities,
    postselect,
    sample_expectation,
)

from conftest import random_unitary

S2 = 1 / math.sqrt(2)

amplitude_lists = st.integers(0, 4).flatmap(
    lambda n: st.lists(
        st.floats(-10, 10, allow_nan=False), min_size=2**n, max_size=2**n
    ).filter(lambda v: np.linalg.norm(v) > 1e-3)
)


def _hadamard_oracle(k: int) -> np.ndarray:
    n = 2**k
    return np.array(
        [[(-1) ** bin(i & j).count("1") for j in range(n)] for i in range(n)]
    ) / math.sqrt(n)


class TestMakeState:
    def test_basis_state(self):
        s = make_state([1, 0], [("q", 1)])
        np.testing.assert_allclose(s.amplitudes, [1, 0])

    def test_uniform(self):
        s = make_state([1, 1], [("q", 1)])
        np.testing.assert_allclose(s.amplitudes, [S2, S2])

    def test_normalizes(self):
        s = make_state([3, 4], [("q", 1)])
        np.testing.assert_allclose(s.amplitudes, [0.6, 0.8])

    def test_zero_vector(self):
        with pytest.raises(RegisterError):
            make_state([0, 0], [("q", 1)])

    def test_layout_mismatch(self):
        with pytest.raises(RegisterError):
            make_state([1, 0, 0], [("q", 1)])

    def test_immutable(self):
        s = make_state([1, 0], [("q", 1)])
        with pytest.raises(ValueError):
            s.amplitudes[0] = 2


class TestHadamard:
    def test_zero_to_plus(self):
        s = hadamard_register(make_state([1, 0], [("q", 1)]), "q")
        np.testing.assert_allclose(s.amplitudes, [S2, S2], atol=1e-15)

    def test_plus_to_zero(self):
        s = hadamard_register(make_state([1, 1], [("q", 1)]), "q")
        np.testing.assert_allclose(s.amplitudes, [1, 0], atol=1e-15)

    def test_uniform_two_qubits(self):
        s = hadamard_register(make_state(np.ones(4), [("r", 2)]), "r")
        np.testing.assert_allclose(s.amplitudes, [1, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_bitwise_sign_oracle(self, rng, k):
        amps = rng.normal(size=(2, 2**k, 2)) + 1j * rng.normal(size=(2, 2**k, 2))
        s = make_state(amps, [("a", 1), ("r", k), ("b", 1)])
        out = hadamard_register(s, "r").tensor()
        expected = np.einsum("ji,aib->ajb", _hadamard_oracle(k), s.tensor())
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_unknown_register(self):
        with pytest.raises(RegisterError):
            hadamard_register(make_state([1, 0], [("q", 1)]), "nope")

    @given(amplitude_lists)
    @settings(max_examples=60, deadline=None)
    def test_involution_and_norm(self, amps):
        n = int(math.log2(len(amps)))
        s = make_state(amps, [("r", n)])
        once = hadamard_register(s, "r")
        assert abs(once.norm() - 1) < 1e-12
        twice = hadamard_register(once, "r")
        np.testing.assert_allclose(twice.amplitudes, s.amplitudes, atol=1e-12)


class TestRotation:
    def test_f_one_leaves_ancilla_zero(self):
        s = attach_ancilla_rotation(make_state([0.6, 0.8], [("q", 1)]), "q", lambda j: 1.0)
        assert expectation(s, "ancilla", 0) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(s.tensor()[:, 0], [0.6, 0.8])

    def test_f_zero_flips_ancilla(self):
        s = attach_ancilla_rotation(make_state([0.6, 0.8], [("q", 1)]), "q", lambda j: 0.0)
        assert expectation(s, "ancilla", 1) == pytest.approx(1.0)

    def test_half_branch(self):
        s = attach_ancilla_rotation(make_state([1, 1], [("q", 1)]), "q", lambda j: 1.0 - j)
        assert expectation(s, "ancilla", 0) == pytest.approx(0.5, abs=1e-15)

    def test_out_of_range_reports_index(self):
        with pytest.raises(RotationError) as info:
            attach_ancilla_rotation(make_state([1, 1, 1, 1], [("q", 2)]), "q", lambda j: 2.0 if j == 2 else 0.5)
        assert info.value.index == 2

    def test_out_of_range_on_empty_branch_is_ignored(self):
        s = attach_ancilla_rotation(make_state([1, 0], [("q", 1)]), "q", lambda j: 5.0 if j == 1 else 1.0)
        assert expectation(s, "ancilla", 0) == pytest.approx(1.0)

    @given(amplitude_lists, st.data())
    @settings(max_examples=60, deadline=None)
    def test_ancilla_probability_brute_force(self, amps, data):
        n = int(math.log2(len(amps)))
        f = data.draw(st.lists(st.floats(-1, 1), min_size=len(amps), max_size=len(amps)))
        s = make_state(amps, [("r", n)])
        rotated = attach_ancilla_rotation(s, "r", lambda j: f[j])
        brute = sum(abs(s.amplitudes[j]) ** 2 * f[j] ** 2 for j in range(len(amps)))
        assert abs(rotated.norm() - 1) < 1e-12
        assert expectation(rotated, "ancilla", 0) == pytest.approx(brute, abs=1e-12)


class TestPostselect:
    def test_plus_state(self):
        s, p = postselect(make_state([1, 1], [("q", 1)]), "q", 0)
        assert p == pytest.approx(0.5)
        assert s.layout == ()
        np.testing.assert_allclose(s.amplitudes, [1.0])

    def test_product_state(self, rng):
        psi = rng.normal(size=4)
        joint = np.kron(psi / np.linalg.norm(psi), [1, 0])
        s, p = postselect(make_state(joint, [("sys", 2), ("flag", 1)]), "flag", 0)
        assert p == pytest.approx(1.0)
        np.testing.assert_allclose(s.amplitudes, psi / np.linalg.norm(psi), atol=1e-15)

    def test_orthonormal_training_states_give_one_over_m(self):
        # |Psi_1> = sum_i |e_i>|i> / sqrt(M), Hadamard on index, keep |0>
        m = 4
        s = make_state(np.eye(m), [("feature", 2), ("index", 2)])
        _, p = postselect(hadamard_register(s, "index"), "index", 0)
        assert p == pytest.approx(1 / m, abs=1e-15)

    def test_empty_branch(self):
        with pytest.raises(PostselectionError):
            postselect(make_state([1, 0], [("q", 1)]), "q", 1)

    def test_bad_outcome(self):
        with pytest.raises(RegisterError):
            postselect(make_state([1, 0], [("q", 1)]), "q", 2)

    def test_completeness(self, rng):
        s = make_state(rng.normal(size=16) + 1j * rng.normal(size=16), [("a", 2), ("b", 2)])
        total = 0.0
        for k in range(4):
            try:
                total += postselect(s, "b", k)[1]
            except PostselectionError:
                pass
        assert total == pytest.approx(1.0, abs=1e-10)


class TestExpectation:
    def test_simple(self):
        assert expectation(make_state([0.6, 0.8], [("q", 1)]), "q", 0) == pytest.approx(0.36)

    def test_marginals_sum_to_one(self, rng):
        s = make_state(rng.normal(size=8), [("a", 1), ("b", 2)])
        assert marginal_probabilities(s, "b").sum() == pytest.approx(1.0)

    def test_exact_mode_delegates(self, rng):
        s = make_state(rng.normal(size=4), [("q", 2)])
        assert sample_expectation(s, "q", 3, Exact()) == expectation(s, "q", 3)

    def test_deterministic_branch_sampled(self):
        s = attach_ancilla_rotation(make_state([1, 1], [("q", 1)]), "q", lambda j: 1.0)
        assert sample_expectation(s, "ancilla", 0, Sampled(100, 7)) == 1.0

    def test_fair_coin(self):
        s = make_state([1, 1], [("q", 1)])
        est = sample_expectation(s, "q", 0, Sampled(10_000, 3))
        assert abs(est - 0.5) <= 5 * 0.5 / 100

    def test_seed_reproducible(self):
        s = make_state([1, 2], [("q", 1)])
        a = sample_expectation(s, "q", 0, Sampled(1000, 11))
        b = sample_expectation(s, "q", 0, Sampled(1000, 11))
        assert a == b
        assert Sampled(10, 1).child(0) != Sampled(10, 1).child(1)

    def test_binomial_band_holds_for_most_seeds(self):
        s = make_state([1, 2], [("q", 1)])
        p, shots = 0.2, 2000
        band = 5 * math.sqrt(p * (1 - p) / shots)
        hits = sum(abs(sample_expectation(s, "q", 0, Sampled(shots, seed)) - p) <= band for seed in range(300))
        assert hits / 300 >= 0.99

    def test_invalid_shots(self):
        with pytest.raises(ValueError):
            Sampled(0, 1)


class TestSpectralDecomposition:
    def test_reconstruction_and_orthonormality(self, rng):
        u = random_unitary(rng, 6)
        a = (u * rng.uniform(-1, 1, 6)) @ u.conj().T
        sd = SpectralDecomposition.of(a)
        assert np.max(np.abs(sd.matrix() - a)) <= 1e-10
        gram = sd.eigenvectors.conj().T @ sd.eigenvectors
        assert np.max(np.abs(gram - np.eye(6))) <= 1e-10
        assert np.all(np.diff(sd.eigenvalues) <= 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            SpectralDecomposition.of([[0, 1], [0, 0]])


class TestPhaseEstimation:
    def test_exact_dyadic(self):
        op = SpectralDecomposition.of(np.diag([0.5, 0.25]))
        out = ideal_phase_estimation(op, [1, 0], PhaseEstimationConfig(2))
        assert [(o.eigenvalue, round(o.weight, 15)) for o in out if o.weight > 0] == [(0.5, 1.0)]
        assert out[0].index == 0

    def test_degenerate_merged(self, rng):
        op = SpectralDecomposition.of(np.eye(4) / 2)
        v = rng.normal(size=4)
        out = ideal_phase_estimation(op, v / np.linalg.norm(v), PhaseEstimationConfig(4))
        assert len(out) == 1
        assert out[0].eigenvalue == 0.5
        assert out[0].weight == pytest.approx(1.0, abs=1e-12)

    def test_rounding_oracle(self):
        op = SpectralDecomposition.of(np.diag([0.3]))
        (out,) = ideal_phase_estimation(op, [1], PhaseEstimationConfig(3))
        assert out.eigenvalue == 0.25
        assert abs(out.eigenvalue - 0.3) <= 2**-4 + np.spacing(0.3)

    def test_weights_are_projections(self, rng):
        u = random_unitary(rng, 4)
        vals = np.array([0.9, 0.6, 0.3, 0.1])
        op = SpectralDecomposition.of((u * vals) @ u.conj().T)
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        out = ideal_phase_estimation(op, v, PhaseEstimationConfig(20))
        beta2 = np.abs(u.conj().T @ v) ** 2
        got = sorted(o.weight for o in out)
        np.testing.assert_allclose(got, sorted(beta2), atol=1e-12)
        assert sum(got) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("bits", [1, 3, 7, 12])
    def test_rounding_error_bound(self, rng, bits):
        vals = rng.uniform(0, 1, 8)
        op = SpectralDecomposition.of(np.diag(vals))
        out = ideal_phase_estimation(op, np.ones(8) / math.sqrt(8), PhaseEstimationConfig(bits))
        for o in out:
            assert abs(o.eigenvalue - op.eigenvalues[o.index]) <= 2.0 ** (-bits - 1) + 1e-15

    def test_rejects_spectrum_outside_unit_interval(self):
        with pytest.raises(SpectrumError):
            ideal_phase_estimation(SpectralDecomposition.of(np.diag([1.5, 0.1])), [1, 0], PhaseEstimationConfig(3))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PhaseEstimationConfig(0)
        with pytest.raises(ValueError):
            PhaseEstimationConfig(3, kappa=0.5)
