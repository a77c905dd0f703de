"""Covariance fast path checked against dense Jordan-Wigner oracles.

Every dense reference here is constructed from the physical mode operators
(JW strings), never from the Majorana coefficient matrices under test.
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import solve_ivp

from conftest import (
    dense_boundary_chain,
    dense_covariance,
    dense_fermion_generator,
    dense_simulator_chain,
    dense_target_chain,
    jw_annihilation,
    jw_majoranas,
    rand_density,
)
from oqsim.gaussian import (
    CovarianceState,
    FermionObservableReport,
    NonContractive,
    QuadraticModel,
    add_chemical,
    add_depolarizing,
    add_gain_loss,
    add_hopping,
    add_pairing,
    annihilation_coeffs,
    build_boundary_chain,
    build_simulator_chain,
    build_target_chain,
    correlation_decay_fit,
    covariance_eom,
    creation_coeffs,
    drift_and_drive,
    evolve_covariance,
    observables,
    steady_state_covariance,
)
from oqsim.lindblad import _integrate, evolve_times, fixed_point

CHAIN = dict(K=1.0, J=0.5, lambda0=1.1, lambda1=1.0)


def product_density(occupations) -> np.ndarray:
    """Dense occupation-basis product state matching from_occupations."""
    psi = np.array([1.0], dtype=complex)
    for occ in occupations:
        psi = np.kron(psi, np.array([1.0 - occ, occ], dtype=complex) ** 0.5)
    return np.outer(psi, psi.conj())


def majorana_quadratic(coeffs: np.ndarray, majoranas) -> np.ndarray:
    """Dense i sum_{jk} coeffs_{jk} c_j c_k."""
    d = len(majoranas)
    dim = majoranas[0].shape[0]
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(d):
        for k in range(d):
            if coeffs[j, k]:
                out += 1j * coeffs[j, k] * majoranas[j] @ majoranas[k]
    return out


def traceless(mat: np.ndarray) -> np.ndarray:
    return mat - np.trace(mat) / mat.shape[0] * np.eye(mat.shape[0])


class TestStates:
    def test_vacuum_blocks(self):
        gamma = CovarianceState.vacuum(3).gamma
        block = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert np.array_equal(gamma, scipy.linalg.block_diag(block, block, block))

    def test_occupations_roundtrip(self):
        state = CovarianceState.from_occupations([1.0, 0.25, 0.0])
        report = observables(state)
        assert np.allclose(report.density, [1.0, 0.25, 0.0], atol=1e-14)
        assert np.allclose(np.diagonal(report.covariance), [0.0, 0.1875, 0.0])

    def test_validation(self):
        with pytest.raises(ValueError, match="antisymmetry"):
            CovarianceState(np.eye(2))
        with pytest.raises(ValueError, match="unphysical"):
            CovarianceState(2.0 * CovarianceState.vacuum(1).gamma)
        with pytest.raises(ValueError, match="even"):
            CovarianceState(np.zeros((3, 3)))
        with pytest.raises(ValueError, match="occupations"):
            CovarianceState.from_occupations([1.2])


class TestCoefficientMaps:
    """Quadratic-form coefficients rebuild the dense operators (up to trace)."""

    def setup_method(self):
        self.n = 3
        self.ann = jw_annihilation(self.n)
        self.majoranas = jw_majoranas(self.n)

    def check(self, coeffs, dense):
        rebuilt = majorana_quadratic(coeffs, self.majoranas)
        assert np.allclose(traceless(rebuilt), traceless(dense), atol=1e-12)

    def test_hopping(self):
        for amp in (1.0, -0.7, 0.4 + 1.3j):
            h = np.zeros((6, 6))
            add_hopping(h, 0, 2, amp)
            term = amp * self.ann[0].conj().T @ self.ann[2]
            self.check(h, term + term.conj().T)

    def test_pairing_is_ordered(self):
        for amp in (1.0, 0.9 - 0.5j):
            h = np.zeros((6, 6))
            add_pairing(h, 1, 2, amp)
            term = amp * self.ann[1] @ self.ann[2]
            self.check(h, term + term.conj().T)
            flipped = np.zeros((6, 6))
            add_pairing(flipped, 2, 1, amp)
            assert np.allclose(flipped, -h)

    def test_chemical(self):
        h = np.zeros((6, 6))
        add_chemical(h, 1, 0.8)
        self.check(h, 0.8 * self.ann[1].conj().T @ self.ann[1])

    def test_mixed_hamiltonian(self):
        h = np.zeros((6, 6))
        dense = np.zeros((8, 8), dtype=complex)
        terms = [
            ("hop", 0, 1, 1.0 + 0.3j),
            ("pair", 0, 2, -0.6 + 1.1j),
            ("chem", 2, 1.7),
        ]
        for kind, *args in terms:
            if kind == "hop":
                x, y, amp = args
                add_hopping(h, x, y, amp)
                t = amp * self.ann[x].conj().T @ self.ann[y]
                dense += t + t.conj().T
            elif kind == "pair":
                x, y, amp = args
                add_pairing(h, x, y, amp)
                t = amp * self.ann[x] @ self.ann[y]
                dense += t + t.conj().T
            else:
                x, mu = args
                add_chemical(h, x, mu)
                dense += mu * self.ann[x].conj().T @ self.ann[x]
        self.check(h, dense)

    def test_self_terms_rejected(self):
        h = np.zeros((6, 6))
        with pytest.raises(ValueError):
            add_hopping(h, 1, 1, 1.0)
        with pytest.raises(ValueError):
            add_pairing(h, 1, 1, 1.0)


class TestSingleMode:
    def lossy_mode(self, rate_amp: float) -> QuadraticModel:
        return QuadraticModel(
            mode_count=1,
            hamiltonian_coeffs=np.zeros((2, 2)),
            linear_jumps=rate_amp * annihilation_coeffs(1, 0)[:, None],
        )

    def test_drift_and_drive_loss(self):
        a, c = drift_and_drive(self.lossy_mode(1.3))
        assert np.allclose(a, -(1.3**2) / 2.0 * np.eye(2))
        assert np.allclose(c, 1.3**2 * np.array([[0.0, -1.0], [1.0, 0.0]]))

    def test_density_decays_at_amplitude_squared(self):
        model = self.lossy_mode(1.1)
        ts = [0.0, 0.4, 1.0, 2.5]
        states = evolve_covariance(model, CovarianceState.from_occupations([1.0]), ts)
        for t, state in zip(ts, states):
            density = observables(state).density[0]
            assert abs(density - np.exp(-(1.1**2) * t)) < 1e-12

    def test_steady_state_is_vacuum(self):
        steady = steady_state_covariance(self.lossy_mode(0.9))
        assert np.allclose(steady.gamma, CovarianceState.vacuum(1).gamma, atol=1e-12)

    def test_hamiltonian_only_is_non_contractive(self):
        h = np.zeros((2, 2))
        add_chemical(h, 0, 1.0)
        model = QuadraticModel(1, h, np.zeros((2, 0), dtype=complex))
        with pytest.raises(NonContractive, match="abscissa"):
            steady_state_covariance(model)


class TestModelValidation:
    def test_quadratic_model_checks(self):
        with pytest.raises(ValueError, match="antisymmetry"):
            QuadraticModel(1, np.eye(2), np.zeros((2, 0), dtype=complex))
        with pytest.raises(ValueError, match="2x2"):
            QuadraticModel(1, np.zeros((4, 4)), np.zeros((4, 0), dtype=complex))
        with pytest.raises(ValueError, match="rows"):
            QuadraticModel(1, np.zeros((2, 2)), np.zeros((4, 1), dtype=complex))
        bad = np.zeros((2, 2))
        bad[0, 1] = 1.0
        bad[1, 0] = -1.0
        with pytest.raises(ValueError, match="nonnegative"):
            QuadraticModel(
                1, np.zeros((2, 2)), np.zeros((2, 0), dtype=complex),
                hermitian_jumps=((bad, -0.1),),
            )

    def test_builder_checks(self):
        with pytest.raises(ValueError, match="two modes"):
            build_target_chain(1)
        target = build_target_chain(3)
        with pytest.raises(ValueError, match="positive"):
            build_simulator_chain(target, 0.0)
        with pytest.raises(ValueError, match="linear-jump"):
            build_simulator_chain(add_depolarizing(target, 0.1), 0.5)
        with pytest.raises(ValueError, match="U must be 0"):
            build_boundary_chain(4, 0.5, 0.5, 0.5, 0.5, interaction=0.3)
        with pytest.raises(ValueError, match="nonnegative"):
            build_boundary_chain(4, 0.5, 0.5, -0.5, 0.5)
        with pytest.raises(ValueError, match="nonnegative"):
            add_depolarizing(target, -0.1)
        with pytest.raises(ValueError, match="sites"):
            add_gain_loss(target, 0.1, sites=[5])

    def test_evolution_checks(self):
        model = build_target_chain(2, periodic=False, **CHAIN)
        state = CovarianceState.vacuum(2)
        with pytest.raises(ValueError, match="sorted"):
            evolve_covariance(model, state, [1.0, 0.5])
        with pytest.raises(ValueError, match="nonnegative"):
            evolve_covariance(model, state, [-1.0])
        with pytest.raises(ValueError, match="dimension"):
            evolve_covariance(model, CovarianceState.vacuum(3), [1.0])


class TestDenseEquivalenceTarget:
    @pytest.mark.parametrize(
        "n,periodic", [(2, False), (2, True), (3, True)], ids=["2-open", "2-ring", "3-ring"]
    )
    def test_trajectories(self, n, periodic):
        model = build_target_chain(n, periodic=periodic, **CHAIN)
        ham, jumps = dense_target_chain(n, periodic=periodic, **CHAIN)
        gen = dense_fermion_generator(ham, jumps)
        majoranas = jw_majoranas(n)
        ts = np.linspace(0.25, 2.5, 10)
        for occ in ([0] * n, [1] + [0] * (n - 1)):
            rhos = evolve_times(gen, product_density(occ), ts, tol=1e-11)
            states = evolve_covariance(model, CovarianceState.from_occupations(occ), ts)
            for rho, state in zip(rhos, states):
                gamma_dense = dense_covariance(rho, majoranas)
                assert np.max(np.abs(state.gamma - gamma_dense)) < 1e-8
                report = observables(state)
                ann = jw_annihilation(n)
                for x in range(n):
                    dens = np.trace(rho @ ann[x].conj().T @ ann[x]).real
                    assert abs(report.density[x] - dens) < 1e-8
                for x in range(n):
                    for y in range(n):
                        if x == y:
                            continue
                        nx = ann[x].conj().T @ ann[x]
                        ny = ann[y].conj().T @ ann[y]
                        cov = np.trace(rho @ nx @ ny).real - (
                            np.trace(rho @ nx).real * np.trace(rho @ ny).real
                        )
                        assert abs(report.covariance[x, y] - cov) < 1e-8

    def test_steady_state_matches_dense_fixed_point(self):
        model = build_target_chain(3, periodic=True, **CHAIN)
        ham, jumps = dense_target_chain(3, periodic=True, **CHAIN)
        sigma, _gap = fixed_point(dense_fermion_generator(ham, jumps))
        gamma_dense = dense_covariance(sigma.matrix, jw_majoranas(3))
        steady = steady_state_covariance(model)
        assert np.max(np.abs(steady.gamma - gamma_dense)) < 1e-8

    def test_lossless_pairing_free_chain_stays_empty(self):
        model = build_target_chain(5, K=1.0, J=0.0, lambda0=1.1, lambda1=1.0)
        steady = steady_state_covariance(model)
        assert np.max(np.abs(observables(steady).density)) < 1e-10


class TestSimulatorChain:
    def test_structure(self):
        target = build_target_chain(3, periodic=True, **CHAIN)
        sim = build_simulator_chain(target, 0.5)
        assert sim.mode_count == 6
        assert np.allclose(
            sim.hamiltonian_coeffs[:6, :6], 0.25 * target.hamiltonian_coeffs
        )
        assert sim.jump_count == 3
        for mu in range(3):
            assert np.allclose(
                sim.linear_jumps[:, mu], 2.0 * annihilation_coeffs(6, 3 + mu)
            )

    def test_dense_equivalence_small(self):
        omega = 0.7
        target = build_target_chain(2, periodic=False, **CHAIN)
        sim = build_simulator_chain(target, omega)
        ham, jumps = dense_simulator_chain(2, periodic=False, omega=omega, **CHAIN)
        gen = dense_fermion_generator(ham, jumps)
        majoranas = jw_majoranas(3)
        ts = np.linspace(0.3, 4.0, 8)
        rhos = evolve_times(gen, product_density([0, 0, 0]), ts, tol=1e-11)
        states = evolve_covariance(sim, CovarianceState.vacuum(3), ts)
        for rho, state in zip(rhos, states):
            assert np.max(np.abs(state.gamma - dense_covariance(rho, majoranas))) < 1e-7

    def test_dense_equivalence_three_site_ring(self):
        omega = 0.6
        target = build_target_chain(3, periodic=True, **CHAIN)
        sim = build_simulator_chain(target, omega)
        ham, jumps = dense_simulator_chain(3, periodic=True, omega=omega, **CHAIN)
        gen = dense_fermion_generator(ham, jumps)
        majoranas = jw_majoranas(6)
        ts = [0.6, 1.8, 3.0]
        rhos = _integrate(gen, product_density([0] * 6), ts, 1e-10, adjoint=False)
        states = evolve_covariance(sim, CovarianceState.vacuum(6), ts)
        for rho, state in zip(rhos, states):
            assert np.max(np.abs(state.gamma - dense_covariance(rho, majoranas))) < 1e-6

    def test_reduced_dynamics_error_scales_as_omega_squared(self):
        target = build_target_chain(3, periodic=True, **CHAIN)
        t_target = 1.2
        start = CovarianceState.from_occupations([1, 0, 1])
        goal = evolve_covariance(target, start, [t_target])[0]
        errors = []
        for omega in (0.4, 0.2):
            sim = build_simulator_chain(target, omega)
            sim_start = CovarianceState.from_occupations([1, 0, 1, 0, 0, 0])
            out = evolve_covariance(sim, sim_start, [t_target / omega**2])[0]
            errors.append(np.max(np.abs(out.gamma[:6, :6] - goal.gamma)))
        ratio = errors[0] / errors[1]
        assert 2.5 < ratio < 6.5


def depolarizing_channel(rho: np.ndarray, site: int, n: int) -> np.ndarray:
    """Tr_site(rho) (x) I_site/2 - rho on n modes."""
    t = rho.reshape((2,) * (2 * n))
    red = np.trace(t, axis1=site, axis2=site + n)
    dim_red = 2 ** (n - 1)
    red = red.reshape(dim_red, dim_red)
    left = 2**site
    right = 2 ** (n - 1 - site)
    r4 = red.reshape(left, right, left, right)
    out = np.einsum("ab,icjd->iacjbd", np.eye(2) / 2.0, r4)
    return out.reshape(2**n, 2**n) - rho


def majorana_depolarizing_action(rho: np.ndarray, site: int, n: int, delta: float) -> np.ndarray:
    cs = jw_majoranas(n)
    c_even, c_odd = cs[2 * site], cs[2 * site + 1]
    amp = np.sqrt(delta / 4.0)
    ops = [amp * c_even, amp * c_odd, amp * 1j * c_even @ c_odd]
    out = np.zeros_like(rho, dtype=complex)
    for op in ops:
        gram = op.conj().T @ op
        out += op @ rho @ op.conj().T - 0.5 * (gram @ rho + rho @ gram)
    return out


class TestDepolarizing:
    def test_single_mode_channel_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(6):
            op = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            left = majorana_depolarizing_action(op, 0, 1, 0.3)
            right = 0.3 * (np.trace(op) * np.eye(2) / 2.0 - op)
            assert np.max(np.abs(left - right)) < 1e-12

    def test_two_mode_even_sector_identity(self):
        rng = np.random.default_rng(11)
        parity = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)
        for site in (0, 1):
            for _ in range(5):
                rho = rand_density(rng, 4)
                rho = 0.5 * (rho + parity @ rho @ parity)
                rho /= np.trace(rho).real
                left = majorana_depolarizing_action(rho, site, 2, 0.4)
                right = 0.4 * depolarizing_channel(rho, site, 2)
                assert np.max(np.abs(left - right)) < 1e-12

    def test_odd_sector_differs(self):
        # The decomposition is exact on the parity-even sector only: when the
        # noisy site carries a JW string, the two superoperators disagree on
        # operators that are odd under the string parity, e.g. c_0 with noise
        # on mode 1.
        odd = jw_majoranas(2)[0]
        left = majorana_depolarizing_action(odd, 1, 2, 1.0)
        right = depolarizing_channel(odd, 1, 2)
        assert np.max(np.abs(left - right)) > 1e-3

    def test_zero_rate_returns_model(self):
        target = build_target_chain(3)
        assert add_depolarizing(target, 0.0) is target
        assert add_gain_loss(target, 0.0) is target

    def test_isolated_mode_relaxes_to_half_filling(self):
        model = add_depolarizing(
            QuadraticModel(1, np.zeros((2, 2)), np.zeros((2, 0), dtype=complex)), 0.3
        )
        assert model.jump_count == 2 and len(model.hermitian_jumps) == 1
        steady = steady_state_covariance(model)
        assert np.allclose(steady.gamma, 0.0, atol=1e-12)
        assert abs(observables(steady).density[0] - 0.5) < 1e-12

        ts = [0.0, 1.0, 3.0]
        states = evolve_covariance(model, CovarianceState.from_occupations([1.0]), ts)
        for t, state in zip(ts, states):
            expected = 0.5 + 0.5 * np.exp(-0.3 * t)
            assert abs(observables(state).density[0] - expected) < 1e-8

    def test_covariance_matches_dense_channel_dynamics(self):
        delta = 0.05
        target = build_target_chain(2, periodic=False, **CHAIN)
        noisy = add_depolarizing(target, delta)
        ham, jumps = dense_target_chain(2, periodic=False, **CHAIN)
        gen = dense_fermion_generator(ham, jumps)

        def rhs(_t, y):
            rho = y.reshape(4, 4)
            out = gen.apply(rho)
            out = out + delta * depolarizing_channel(rho, 0, 2)
            out = out + delta * depolarizing_channel(rho, 1, 2)
            return out.reshape(-1)

        ts = [0.5, 1.2, 2.0, 3.0]
        sol = solve_ivp(
            rhs, (0.0, ts[-1]), product_density([1, 0]).reshape(-1),
            t_eval=ts, rtol=1e-10, atol=1e-12,
        )
        assert sol.success
        majoranas = jw_majoranas(2)
        states = evolve_covariance(noisy, CovarianceState.from_occupations([1, 0]), ts)
        for k, state in enumerate(states):
            rho = sol.y[:, k].reshape(4, 4)
            assert np.max(np.abs(state.gamma - dense_covariance(rho, majoranas))) < 1e-7

    def test_steady_state_matches_dense_channel(self):
        delta = 0.05
        target = build_target_chain(2, periodic=False, **CHAIN)
        noisy = add_depolarizing(target, delta)
        ham, jumps = dense_target_chain(2, periodic=False, **CHAIN)
        gen = dense_fermion_generator(ham, jumps)

        def rhs(_t, y):
            rho = y.reshape(4, 4)
            out = gen.apply(rho)
            out = out + delta * depolarizing_channel(rho, 0, 2)
            out = out + delta * depolarizing_channel(rho, 1, 2)
            return out.reshape(-1)

        sol = solve_ivp(
            rhs, (0.0, 400.0), product_density([0, 0]).reshape(-1),
            t_eval=[400.0], rtol=1e-11, atol=1e-13,
        )
        assert sol.success
        rho = sol.y[:, 0].reshape(4, 4)
        assert np.max(np.abs(rhs(0.0, sol.y[:, 0]))) < 1e-9
        steady = steady_state_covariance(noisy)
        assert np.max(np.abs(steady.gamma - dense_covariance(rho, jw_majoranas(2)))) < 1e-6


class TestBoundaryChain:
    def test_pairing_free_chain_empties(self):
        model = build_boundary_chain(4, h=1.0, pairing_gamma=0.0,
                                     gamma_left=0.5, gamma_right=0.5)
        steady = steady_state_covariance(model)
        assert np.max(np.abs(observables(steady).density)) < 1e-9

    def test_dense_equivalence(self):
        params = dict(n=3, h=0.4, pairing_gamma=0.5, gamma_left=0.5, gamma_right=0.5)
        model = build_boundary_chain(**params)
        ham, jumps = dense_boundary_chain(**params)
        gen = dense_fermion_generator(ham, jumps)
        majoranas = jw_majoranas(3)
        ts = np.linspace(0.4, 3.2, 6)
        rhos = evolve_times(gen, product_density([0, 1, 0]), ts, tol=1e-11)
        states = evolve_covariance(
            model, CovarianceState.from_occupations([0, 1, 0]), ts
        )
        for rho, state in zip(rhos, states):
            assert np.max(np.abs(state.gamma - dense_covariance(rho, majoranas))) < 1e-8

        sigma, _gap = fixed_point(gen)
        steady = steady_state_covariance(model)
        assert np.max(np.abs(steady.gamma - dense_covariance(sigma.matrix, majoranas))) < 1e-8

    def test_dense_equivalence_with_gain_loss_noise(self):
        params = dict(n=3, h=0.7, pairing_gamma=0.5, gamma_left=0.6, gamma_right=0.4)
        model = build_boundary_chain(delta=0.02, **params)
        ham, jumps = dense_boundary_chain(delta=0.02, **params)
        gen = dense_fermion_generator(ham, jumps)
        ann = jw_annihilation(3)
        sigma, _gap = fixed_point(gen)
        steady = steady_state_covariance(model)
        report = observables(steady)
        assert np.max(np.abs(steady.gamma - dense_covariance(sigma.matrix, jw_majoranas(3)))) < 1e-8
        # gain/loss noise keeps the state Gaussian, so the pair-contraction
        # covariances must match the dense four-point values too
        for x in range(3):
            for y in range(3):
                if x == y:
                    continue
                nx = ann[x].conj().T @ ann[x]
                ny = ann[y].conj().T @ ann[y]
                dense_cov = np.trace(sigma.matrix @ nx @ ny).real - (
                    np.trace(sigma.matrix @ nx).real * np.trace(sigma.matrix @ ny).real
                )
                assert abs(report.covariance[x, y] - dense_cov) < 1e-8

    def test_undriven_chain_is_non_contractive(self):
        model = build_boundary_chain(5, h=0.4, pairing_gamma=0.5,
                                     gamma_left=0.0, gamma_right=0.0)
        with pytest.raises(NonContractive):
            steady_state_covariance(model)

    def test_interaction_rejected(self):
        with pytest.raises(ValueError, match="quadratic"):
            build_boundary_chain(4, 0.4, 0.5, 0.5, 0.5, interaction=1.0)


class TestHamiltonianEvolution:
    def test_unitary_flow_matches_dense_and_wick_is_exact(self):
        n = 3
        h = np.zeros((2 * n, 2 * n))
        ann = jw_annihilation(n)
        dense = np.zeros((8, 8), dtype=complex)
        for x, y, amp in [(0, 1, 0.9 + 0.4j), (1, 2, -0.8)]:
            add_hopping(h, x, y, amp)
            t = amp * ann[x].conj().T @ ann[y]
            dense += t + t.conj().T
        for x, y, amp in [(0, 2, 0.5 - 1.1j)]:
            add_pairing(h, x, y, amp)
            t = amp * ann[x] @ ann[y]
            dense += t + t.conj().T
        add_chemical(h, 1, 1.3)
        dense += 1.3 * ann[1].conj().T @ ann[1]

        model = QuadraticModel(n, h, np.zeros((2 * n, 0), dtype=complex))
        start = CovarianceState.from_occupations([1, 0, 1])
        s = 0.7
        state = evolve_covariance(model, start, [s])[0]

        u = scipy.linalg.expm(-1j * dense * s)
        rho = u @ product_density([1, 0, 1]) @ u.conj().T
        gamma_dense = dense_covariance(rho, jw_majoranas(n))
        assert np.max(np.abs(state.gamma - gamma_dense)) < 1e-9

        spec0 = np.sort(np.linalg.eigvalsh(1j * start.gamma))
        spec1 = np.sort(np.linalg.eigvalsh(1j * state.gamma))
        assert np.max(np.abs(spec0 - spec1)) < 1e-10

        report = observables(state)
        for x in range(n):
            for y in range(n):
                nx = ann[x].conj().T @ ann[x]
                ny = ann[y].conj().T @ ann[y]
                val = np.trace(rho @ nx @ ny).real
                if x == y:
                    dens = np.trace(rho @ nx).real
                    assert abs(report.covariance[x, x] - dens * (1 - dens)) < 1e-9
                else:
                    cov = val - np.trace(rho @ nx).real * np.trace(rho @ ny).real
                    assert abs(report.covariance[x, y] - cov) < 1e-9

    def test_eom_matches_finite_difference(self):
        model = add_depolarizing(build_target_chain(3, **CHAIN), 0.1)
        state = CovarianceState.from_occupations([1, 0.5, 0])
        eps = 1e-6
        plus = evolve_covariance(model, state, [eps])[0].gamma
        derivative = covariance_eom(model, state)
        assert np.max(np.abs((plus - state.gamma) / eps - derivative)) < 1e-4


class TestLargerChains:
    def test_density_converges_with_size(self):
        densities = {}
        for n in (11, 21, 41):
            steady = steady_state_covariance(build_target_chain(n, **CHAIN))
            densities[n] = float(np.mean(observables(steady).density))
        assert abs(densities[41] - densities[21]) < abs(densities[21] - densities[11])
        assert abs(densities[41] - densities[21]) < 1e-3

    def test_correlation_phases(self):
        n = 40
        x0 = n // 4
        fits = {}
        for h in (0.4, 0.9):
            model = build_boundary_chain(n, h=h, pairing_gamma=0.5,
                                         gamma_left=0.5, gamma_right=0.5)
            report = observables(steady_state_covariance(model))
            ds = np.arange(2, n - x0 - 4)
            fits[h] = correlation_decay_fit(ds, report.covariance[x0, x0 + ds])
        # h = 0.9 sits above h_c = 0.75: sharp exponential decay; h = 0.4 is
        # in the long-range phase, where the envelope decays far slower.
        assert fits[0.9][0] < 2.0 and fits[0.9][1] > 0.95
        assert fits[0.4][0] > 5.0

    def test_decay_fit_validation(self):
        with pytest.raises(ValueError, match="blocks"):
            correlation_decay_fit([1.0, 2.0], [1.0, 0.5])
        ds = np.arange(24)
        length, r2 = correlation_decay_fit(ds, np.exp(-0.25 * ds))
        assert abs(length - 4.0) < 1e-9 and abs(r2 - 1.0) < 1e-12
        length_flat, _ = correlation_decay_fit(ds, np.ones(24))
        assert length_flat == np.inf


class TestReports:
    def test_maximally_mixed(self):
        report = observables(CovarianceState(np.zeros((6, 6))))
        assert np.allclose(report.density, 0.5)
        off = report.covariance - np.diag(np.diagonal(report.covariance))
        assert np.allclose(off, 0.0)
        assert np.allclose(np.diagonal(report.covariance), 0.25)

    def test_metadata_and_rows(self):
        state = CovarianceState.vacuum(2)
        report = observables(state, metadata={"tag": "x"})
        assert report.metadata["mode_count"] == 2
        assert report.metadata["tag"] == "x"
        rows = report.csv_rows()
        assert ("density", 0, 0, 0.0) in rows
        assert len(rows) == 2 + 4

    def test_variance_bounds_enforced(self):
        with pytest.raises(ValueError, match="variance"):
            FermionObservableReport(
                density=np.array([0.5]), covariance=np.array([[0.3]])
            )

    def test_json_summary(self):
        model = build_target_chain(3, **CHAIN)
        summary = model.json_summary()
        assert summary["label"] == "target-chain"
        assert summary["mode_count"] == 3
        assert summary["params"]["lambda0"] == 1.1
