"""Tests for the ancilla-based simulator encoding and its diagnostics.

The encoded generator is checked against superoperators assembled by hand
from explicit Kronecker products, the reduced dynamics against closed-form
target solutions, and the remainder decomposition against a finite-difference
evaluation of the same trajectory (the decomposition is an exact identity, so
any transcription error in a term shows up as a mismatch far above the
quadrature floor).
"""

import math
import warnings

import numpy as np
import pytest

from conftest import rand_density, rand_generator, rand_hermitian, rand_complex
from oqsim.analogue import (
    DAMPING_RATE,
    SIGMA_LOWER,
    EncodingError,
    ExcitationBoundViolation,
    InsufficientSampling,
    NoiseModel,
    NoiseTerm,
    Trajectory,
    add_noise,
    amplitude_damping_noise,
    ancilla_excitation_norms,
    coherent_noise,
    custom_noise,
    dephasing_noise,
    depolarizing_noise,
    encode,
    remainder_diagnostics,
    run_simulator,
    simulate_trajectory,
)
from oqsim.lindblad import (
    DimensionMismatch,
    HilbertSpec,
    LindbladGenerator,
    LocalOperator,
    evolve,
    trace_norm,
    trace_norm_distance,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


def kron(*ops):
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def lindblad_rhs(h, jumps, x):
    out = -1j * (h @ x - x @ h)
    for l_mat in jumps:
        ld = l_mat.conj().T
        ldl = ld @ l_mat
        out += l_mat @ x @ ld - 0.5 * (ldl @ x + x @ ldl)
    return out


def amp_damp_target(rate: float = 1.0) -> LindbladGenerator:
    space = HilbertSpec((2,))
    return LindbladGenerator(
        space, [], [LocalOperator(math.sqrt(rate) * LOWER, (0,))]
    )


class TestEncoding:
    def test_rejects_target_without_jumps(self):
        space = HilbertSpec((2,))
        gen = LindbladGenerator(space, [LocalOperator(Z, (0,))], [])
        with pytest.raises(EncodingError):
            encode(gen, 0.1)

    def test_rejects_nonpositive_omega(self):
        with pytest.raises(EncodingError):
            encode(amp_damp_target(), 0.0)
        with pytest.raises(EncodingError):
            encode(amp_damp_target(), -0.3)

    def test_combined_space_layout(self):
        rng = np.random.default_rng(7)
        target = rand_generator(rng, (2, 3), n_jumps=2)
        sim = encode(target, 0.2)
        assert sim.combined_space.site_dims == (2, 3, 2, 2)
        assert sim.system_sites == (0, 1)
        assert sim.ancilla_sites == (2, 3)
        assert sim.ancilla_count == 2
        assert sim.damping_rate == DAMPING_RATE == 4.0
        assert sim.delta == 0.0 and sim.z_prime == 0

    def test_single_site_matches_hand_built_generator(self):
        rng = np.random.default_rng(11)
        h = rand_hermitian(rng, 2)
        l_mat = rand_complex(rng, (2, 2))
        omega = 0.3
        target = LindbladGenerator(
            HilbertSpec((2,)),
            [LocalOperator(h, (0,))],
            [LocalOperator(l_mat, (0,))],
        )
        sim = encode(target, omega)

        big_h = omega**2 * kron(h, I2) + omega * (
            kron(l_mat, LOWER.conj().T) + kron(l_mat.conj().T, LOWER)
        )
        big_jumps = [2.0 * kron(I2, LOWER)]
        for _ in range(5):
            x = rand_complex(rng, (4, 4))
            expected = lindblad_rhs(big_h, big_jumps, x)
            np.testing.assert_allclose(
                sim.generator.apply(x), expected, atol=1e-12
            )

    def test_two_site_matches_hand_built_generator(self):
        rng = np.random.default_rng(12)
        h = rand_hermitian(rng, 4)
        l0 = rand_complex(rng, (2, 2))
        l1 = rand_complex(rng, (2, 2))
        omega = 0.45
        target = LindbladGenerator(
            HilbertSpec((2, 2)),
            [LocalOperator(h, (0, 1))],
            [LocalOperator(l0, (0,)), LocalOperator(l1, (1,))],
        )
        sim = encode(target, omega)
        assert sim.interaction_supports == [(0, 2), (1, 3)]

        sd = LOWER.conj().T
        big_h = (
            omega**2 * kron(h, I2, I2)
            + omega * (kron(l0, I2, sd, I2) + kron(l0.conj().T, I2, LOWER, I2))
            + omega * (kron(I2, l1, I2, sd) + kron(I2, l1.conj().T, I2, LOWER))
        )
        big_jumps = [2.0 * kron(I2, I2, LOWER, I2), 2.0 * kron(I2, I2, I2, LOWER)]
        for _ in range(4):
            x = rand_complex(rng, (16, 16))
            expected = lindblad_rhs(big_h, big_jumps, x)
            np.testing.assert_allclose(
                sim.generator.apply(x), expected, atol=1e-11
            )


class TestRunSimulator:
    def test_zero_time_returns_input(self):
        sim = encode(amp_damp_target(), 0.1)
        rho0 = np.array([[0.25, 0.1], [0.1, 0.75]], dtype=complex)
        out = run_simulator(sim, rho0, 0.0)
        np.testing.assert_allclose(out.matrix, rho0, atol=1e-14)

    def test_negative_time_rejected(self):
        sim = encode(amp_damp_target(), 0.1)
        with pytest.raises(ValueError):
            run_simulator(sim, np.diag([1.0, 0.0]), -1.0)

    def test_amplitude_damping_small_omega(self):
        # Target population decays as e^{-t}; the simulator reproduces it up
        # to an O(omega^2) encoding error.
        sim = encode(amp_damp_target(), 0.1)
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        out = run_simulator(sim, rho0, 1.0)
        assert abs(out.matrix[1, 1].real - math.exp(-1.0)) < 0.02

    def test_error_scaling_quadratic_in_omega(self):
        target = amp_damp_target()
        rho0 = np.array([[0.2, 0.3 - 0.1j], [0.3 + 0.1j, 0.8]], dtype=complex)
        exact = evolve(target, rho0, 1.0).matrix
        omegas = [0.4, 0.2, 0.1, 0.05]
        errs = []
        for omega in omegas:
            sim = encode(target, omega)
            out = run_simulator(sim, rho0, 1.0)
            errs.append(trace_norm_distance(out.matrix, exact))
        slope = np.polyfit(np.log(omegas), np.log(errs), 1)[0]
        assert 1.7 < slope < 2.3

    def test_two_qubit_target_accuracy(self):
        space = HilbertSpec((2, 2))
        target = LindbladGenerator(
            space,
            [
                LocalOperator(0.7 * Z, (0,)),
                LocalOperator(0.5 * kron(X, X), (0, 1)),
            ],
            [LocalOperator(LOWER, (0,)), LocalOperator(0.6 * LOWER, (1,))],
        )
        rng = np.random.default_rng(3)
        rho0 = rand_density(rng, 4)
        exact = evolve(target, rho0, 0.7).matrix
        out = run_simulator(encode(target, 0.1), rho0, 0.7)
        assert trace_norm_distance(out.matrix, exact) < 0.05


class TestNoiseCatalog:
    def setup_method(self):
        self.space = HilbertSpec((2,))
        rng = np.random.default_rng(23)
        self.xs = [rand_complex(rng, (2, 2)) for _ in range(4)]

    def test_dephasing_action(self):
        term = dephasing_noise(0)
        for x in self.xs:
            expected = 0.5 * (Z @ x @ Z - x)
            np.testing.assert_allclose(
                term.generator_action(x, self.space), expected, atol=1e-13
            )

    def test_amplitude_damping_action(self):
        term = amplitude_damping_noise(0)
        for x in self.xs:
            expected = 0.5 * lindblad_rhs(np.zeros((2, 2)), [LOWER], x)
            np.testing.assert_allclose(
                term.generator_action(x, self.space), expected, atol=1e-13
            )

    def test_depolarizing_action(self):
        term = depolarizing_noise(0)
        for x in self.xs:
            expected = 0.5 * (np.trace(x) * I2 / 2.0 - x)
            np.testing.assert_allclose(
                term.generator_action(x, self.space), expected, atol=1e-13
            )

    def test_coherent_action(self):
        term = coherent_noise(0, "x")
        for x in self.xs:
            expected = -1j * (X / 2.0 @ x - x @ X / 2.0)
            np.testing.assert_allclose(
                term.generator_action(x, self.space), expected, atol=1e-13
            )

    def test_catalog_bounds_are_unit(self):
        for term in (
            dephasing_noise(0),
            amplitude_damping_noise(0),
            depolarizing_noise(0),
            coherent_noise(0),
        ):
            assert term.diamond_bound == 1.0
            assert term.normalization == 0.5

    def test_custom_noise_warns_and_records_bound(self):
        with pytest.warns(UserWarning, match="diamond norm bounded crudely"):
            term = custom_noise("mine", (0,), jumps=[Z])
        # D_Z has vectorized spectral norm 2, so the crude bound is 4.
        assert abs(term.diamond_bound - 4.0) < 1e-12
        with pytest.raises(ValueError, match="rescale"):
            NoiseModel(0.1, (term,))
        with pytest.warns(UserWarning):
            scaled = custom_noise("mine", (0,), jumps=[Z / 2.0])
        NoiseModel(0.1, (scaled,))

    def test_noise_model_rejects_negative_delta(self):
        with pytest.raises(ValueError):
            NoiseModel(-0.1, (dephasing_noise(0),))


class TestAddNoise:
    def two_jump_target(self):
        space = HilbertSpec((2, 2))
        return LindbladGenerator(
            space,
            [LocalOperator(0.4 * Z, (0,))],
            [LocalOperator(LOWER, (0,)), LocalOperator(0.8 * LOWER, (1,))],
        )

    def test_z_prime_hand_computed(self):
        # Interaction supports are (0,2) and (1,3). A noise term on site 0
        # meets itself and interaction (0,2); one on ancilla 2 meets itself
        # and (0,2). Both give 2, so Z' = 2.
        sim = encode(self.two_jump_target(), 0.2)
        noise = NoiseModel(0.05, (dephasing_noise(0), amplitude_damping_noise(2)))
        noisy = add_noise(sim, noise)
        assert noisy.z_prime == 2
        assert noisy.delta == 0.05

    def test_declared_z_prime_validated(self):
        sim = encode(self.two_jump_target(), 0.2)
        terms = (dephasing_noise(0), amplitude_damping_noise(2))
        with pytest.raises(ValueError, match="below computed"):
            add_noise(sim, NoiseModel(0.05, terms, z_prime=1))
        noisy = add_noise(sim, NoiseModel(0.05, terms, z_prime=5))
        assert noisy.z_prime == 5

    def test_noise_support_out_of_range(self):
        sim = encode(self.two_jump_target(), 0.2)
        with pytest.raises(DimensionMismatch):
            add_noise(sim, NoiseModel(0.05, (dephasing_noise(4),)))

    def test_delta_zero_matches_noiseless(self):
        target = amp_damp_target()
        sim = encode(target, 0.2)
        noisy = add_noise(sim, NoiseModel(0.0, (dephasing_noise(0), coherent_noise(1))))
        rho0 = np.array([[0.6, 0.2j], [-0.2j, 0.4]], dtype=complex)
        t_a = simulate_trajectory(sim, rho0, 1.0, dt=0.05)
        t_b = simulate_trajectory(noisy, rho0, 1.0, dt=0.05)
        for a, b in zip(t_a.states, t_b.states):
            assert trace_norm_distance(a, b) < 1e-10

    def test_noisy_dynamics_differ(self):
        target = amp_damp_target()
        sim = encode(target, 0.2)
        noisy = add_noise(sim, NoiseModel(0.2, (dephasing_noise(0),)))
        rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        a = simulate_trajectory(sim, rho0, 2.0, dt=0.1).states[-1]
        b = simulate_trajectory(noisy, rho0, 2.0, dt=0.1).states[-1]
        assert trace_norm_distance(a, b) > 1e-3


class TestTrajectory:
    def test_uniform_grid(self):
        sim = encode(amp_damp_target(), 0.3)
        rho0 = np.diag([0.3, 0.7]).astype(complex)
        traj = simulate_trajectory(sim, rho0, 1.0, dt=0.02)
        assert len(traj.times) == 51
        assert abs(traj.spacing - 0.02) < 1e-14
        np.testing.assert_allclose(traj.states[0], sim.initial_state(rho0))
        for state in traj.states:
            assert abs(np.trace(state) - 1.0) < 1e-8

    def test_grid_covers_requested_time(self):
        sim = encode(amp_damp_target(), 0.3)
        traj = simulate_trajectory(sim, np.diag([1.0, 0.0]), 0.05, dt=0.02)
        assert len(traj.times) == 4
        assert traj.times[-1] >= 0.05 - 1e-12


class TestExcitationNorms:
    def test_bounds_hold_on_random_instances(self):
        for seed in range(4):
            rng = np.random.default_rng(100 + seed)
            target = rand_generator(rng, (2,), n_jumps=1 + seed % 2)
            for omega in (0.1, 0.4, 0.8):
                sim = encode(target, omega)
                rho0 = rand_density(rng, 2)
                traj = simulate_trajectory(sim, rho0, 2.5, dt=0.05)
                report = ancilla_excitation_norms(sim, traj)
                assert report.max_ratio_single <= 1 + 1e-6
                assert report.max_ratio_pair <= 1 + 1e-6
                assert np.max(report.single) > 0

    def test_single_norm_reaches_omega_scale(self):
        sim = encode(amp_damp_target(), 0.2)
        traj = simulate_trajectory(sim, np.diag([0.0, 1.0]), 3.0, dt=0.05)
        report = ancilla_excitation_norms(sim, traj)
        assert np.max(report.single) > 0.2 / 20
        assert report.single_bound == pytest.approx(0.1)
        assert report.pair_bound == pytest.approx(0.01)

    def test_noisy_bounds_hold(self):
        rng = np.random.default_rng(41)
        target = rand_generator(rng, (2,), n_jumps=2)
        noise = NoiseModel(0.1, (dephasing_noise(0), amplitude_damping_noise(1)))
        sim = add_noise(encode(target, 0.3), noise)
        traj = simulate_trajectory(sim, rand_density(rng, 2), 2.0, dt=0.05)
        report = ancilla_excitation_norms(sim, traj)
        zp = sim.z_prime
        assert report.single_bound == pytest.approx(0.15 + zp * 0.1)
        assert max(report.max_ratio_single, report.max_ratio_pair) <= 1 + 1e-6

    def test_violation_raises(self):
        # An ancilla prepared in |+> carries excitation norm 1/2, far above
        # the omega/2 bound that holds for dynamically generated states.
        sim = encode(amp_damp_target(), 0.1)
        plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
        fake = np.kron(np.diag([0.5, 0.5]).astype(complex), plus)
        traj = Trajectory(np.array([0.0, 0.01, 0.02]), [fake, fake, fake])
        with pytest.raises(ExcitationBoundViolation):
            ancilla_excitation_norms(sim, traj)
        report = ancilla_excitation_norms(sim, traj, enforce=False)
        assert report.max_ratio_single > 5


class TestRemainder:
    def run_report(self, target, omega, rho0, t_sim=1.0, dt=0.01, noise=None, **kw):
        sim = encode(target, omega)
        if noise is not None:
            sim = add_noise(sim, noise)
        traj = simulate_trajectory(sim, rho0, t_sim, dt=dt, tol=1e-11)
        return sim, remainder_diagnostics(sim, traj, tol=1e-10, **kw)

    def test_identity_single_jump_no_hamiltonian(self):
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        sim, report = self.run_report(amp_damp_target(), 0.25, rho0)
        assert report.max_mismatch < report.threshold
        # q_0 = -D_L(|1><1|) has trace norm exactly 2.
        assert report.q_norms[0] == pytest.approx(2.0, abs=1e-9)

    def test_identity_with_hamiltonian(self):
        space = HilbertSpec((2,))
        target = LindbladGenerator(
            space, [LocalOperator(0.7 * X, (0,))], [LocalOperator(LOWER, (0,))]
        )
        rho0 = np.diag([0.2, 0.8]).astype(complex)
        _, report = self.run_report(target, 0.2, rho0)
        assert report.max_mismatch < report.threshold
        assert "Q1[0]" in report.term_norms and "Q2[0]" in report.term_norms

    def test_identity_two_jumps_cross_terms(self):
        rng = np.random.default_rng(55)
        space = HilbertSpec((2, 2))
        target = LindbladGenerator(
            space,
            [LocalOperator(0.5 * kron(X, X), (0, 1))],
            [
                LocalOperator(LOWER, (0,)),
                LocalOperator(rand_complex(rng, (2, 2)) * 0.5, (1,)),
            ],
        )
        rho0 = rand_density(rng, 4)
        _, report = self.run_report(target, 0.2, rho0, t_sim=0.8)
        assert report.max_mismatch < report.threshold
        for tid in ("Q3[0,1]", "Q3[1,0]", "Q4[0,1]", "Q4[0,0]"):
            assert tid in report.term_norms

    def test_identity_with_noise(self):
        noise = NoiseModel(0.15, (dephasing_noise(0), coherent_noise(1, "x")))
        rho0 = np.array([[0.3, 0.2], [0.2, 0.7]], dtype=complex)
        sim, report = self.run_report(
            amp_damp_target(), 0.2, rho0, t_sim=0.8, dt=0.004, noise=noise
        )
        assert report.max_mismatch < report.threshold
        for tid in ("K0[0]", "K0[1]", "K1[0,0]", "K2[0,1]"):
            assert tid in report.term_norms

    def test_q_norm_bound_for_normalized_jumps(self):
        for seed in range(5):
            rng = np.random.default_rng(200 + seed)
            target = rand_generator(rng, (2,), n_jumps=2, jump_scale=1.0)
            rho0 = rand_density(rng, 2)
            _, report = self.run_report(target, 0.2, rho0, t_sim=0.3)
            # ||D_L(rho)||_1 <= 2 ||L||^2 and the jumps are normalized.
            for norm in report.q_norms.values():
                assert norm <= 2.0 + 1e-9

    def test_remainder_scales_quadratically(self):
        rho0 = np.diag([0.1, 0.9]).astype(complex)
        _, small = self.run_report(amp_damp_target(), 0.1, rho0)
        _, large = self.run_report(amp_damp_target(), 0.2, rho0)
        ratio = np.max(large.assembled_norm) / np.max(small.assembled_norm)
        assert 3.0 < ratio < 5.0

    def test_mismatch_shrinks_with_grid(self):
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        _, coarse = self.run_report(
            amp_damp_target(), 0.4, rho0, dt=0.04, strict=False
        )
        _, fine = self.run_report(
            amp_damp_target(), 0.4, rho0, dt=0.01, strict=False
        )
        assert fine.max_mismatch < coarse.max_mismatch

    def test_rejects_coarse_grid(self):
        sim = encode(amp_damp_target(), 0.2)
        traj = simulate_trajectory(sim, np.diag([0.0, 1.0]), 1.0, dt=0.1)
        with pytest.raises(InsufficientSampling, match="0.05"):
            remainder_diagnostics(sim, traj)

    def test_rejects_short_trajectory(self):
        sim = encode(amp_damp_target(), 0.2)
        state = sim.initial_state(np.diag([0.0, 1.0]))
        traj = Trajectory(np.arange(4) * 0.01, [state] * 4)
        with pytest.raises(InsufficientSampling, match="5 samples"):
            remainder_diagnostics(sim, traj)

    def test_rejects_nonuniform_grid(self):
        sim = encode(amp_damp_target(), 0.2)
        state = sim.initial_state(np.diag([0.0, 1.0]))
        times = np.array([0.0, 0.01, 0.03, 0.04, 0.05])
        with pytest.raises(InsufficientSampling, match="uniform"):
            remainder_diagnostics(sim, Trajectory(times, [state] * 5))

    def test_report_tables(self):
        rho0 = np.diag([0.3, 0.7]).astype(complex)
        _, report = self.run_report(amp_damp_target(), 0.2, rho0, t_sim=0.5)
        n_t = len(report.times)
        rows = report.to_csv_rows()
        assert len(rows) == n_t * (len(report.term_norms) + 1)
        assert {r[1] for r in rows} == set(report.term_norms) | {"total"}
        summary = report.to_json_summary()
        assert summary["max_mismatch"] == report.max_mismatch
        assert summary["q_norms"]["0"] == report.q_norms[0]
        assert summary["max_assembled_norm"] >= 0
