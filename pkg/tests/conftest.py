"""Shared random-instance helpers for the test suite."""

from __future__ import annotations

import numpy as np

from oqsim.lindblad import HilbertSpec, LindbladGenerator, LocalOperator


def rand_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rand_complex(rng, (dim, dim))
    return 0.5 * (a + a.conj().T)


def rand_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rand_complex(rng, (dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def rand_generator(
    rng: np.random.Generator,
    site_dims,
    n_jumps: int = 2,
    jump_scale: float = 1.0,
) -> LindbladGenerator:
    """Random geometrically unstructured generator on the given sites."""
    space = HilbertSpec(site_dims)
    d = space.total_dim
    sites = tuple(range(space.site_count))
    h = LocalOperator(rand_hermitian(rng, d), sites)
    jumps = []
    for _ in range(n_jumps):
        mat = rand_complex(rng, (d, d))
        mat *= jump_scale / max(np.linalg.norm(mat, 2), 1e-12)
        jumps.append(LocalOperator(mat, sites))
    return LindbladGenerator(space, [h], jumps)


# ---------------------------------------------------------------------------
# Jordan-Wigner oracles for the fermionic fast path. Everything here is built
# from the physical mode operators a_x = Z^{ox} (x) a (x) I, never from the
# Majorana coefficient matrices under test.


def jw_annihilation(n: int) -> list[np.ndarray]:
    """Annihilation matrices a_0..a_{n-1} on n qubits (|1> = occupied)."""
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for x in range(n):
        factors = [z] * x + [lower] + [eye] * (n - x - 1)
        out = factors[0]
        for f in factors[1:]:
            out = np.kron(out, f)
        ops.append(out)
    return ops


def jw_majoranas(n: int) -> list[np.ndarray]:
    """Majoranas c_{2x} = a_x + a_x^dag, c_{2x+1} = -i(a_x - a_x^dag)."""
    out = []
    for a in jw_annihilation(n):
        out.append(a + a.conj().T)
        out.append(-1j * (a - a.conj().T))
    return out


def dense_covariance(rho: np.ndarray, majoranas) -> np.ndarray:
    """Gamma_{jk} = (i/2) Tr(rho [c_j, c_k]) read off a dense state."""
    d = len(majoranas)
    gamma = np.zeros((d, d))
    for j in range(d):
        for k in range(j + 1, d):
            comm = majoranas[j] @ majoranas[k] - majoranas[k] @ majoranas[j]
            val = 0.5j * np.trace(rho @ comm)
            assert abs(val.imag) < 1e-9
            gamma[j, k] = val.real
            gamma[k, j] = -val.real
    return gamma


def dense_target_chain(n, K, J, lambda0, lambda1, periodic):
    """Dense (H, jumps) for the fermion chain, straight from the mode sums."""
    ann = jw_annihilation(n)
    dim = 2**n
    ham = np.zeros((dim, dim), dtype=complex)
    jumps = []
    bonds = range(n) if periodic else range(n - 1)
    for x in bonds:
        y = (x + 1) % n
        hop = K * ann[x].conj().T @ ann[y]
        pair = J * ann[x] @ ann[y]
        ham += hop + hop.conj().T + pair + pair.conj().T
        jumps.append(lambda0 * ann[x] + lambda1 * ann[y])
    return ham, jumps


def dense_simulator_chain(n, K, J, lambda0, lambda1, periodic, omega):
    """Dense ancilla encoding of the chain: modes 0..n-1 system, rest ancillas."""
    bonds = list(range(n) if periodic else range(n - 1))
    total = n + len(bonds)
    ann = jw_annihilation(total)
    dim = 2**total
    ham = np.zeros((dim, dim), dtype=complex)
    jumps = []
    for x in bonds:
        y = (x + 1) % n
        hop = K * ann[x].conj().T @ ann[y]
        pair = J * ann[x] @ ann[y]
        ham += omega**2 * (hop + hop.conj().T + pair + pair.conj().T)
    for mu, x in enumerate(bonds):
        y = (x + 1) % n
        ell = lambda0 * ann[x] + lambda1 * ann[y]
        b = ann[n + mu]
        ham += omega * (b.conj().T @ ell + ell.conj().T @ b)
        jumps.append(2.0 * b)
    return ham, jumps


def dense_boundary_chain(n, h, pairing_gamma, gamma_left, gamma_right, delta=0.0):
    """Dense (H, jumps) for the boundary-driven open chain."""
    ann = jw_annihilation(n)
    dim = 2**n
    ham = np.zeros((dim, dim), dtype=complex)
    for x in range(n):
        ham += 2.0 * h * ann[x].conj().T @ ann[x]
    for x in range(n - 1):
        term = ann[x] @ ann[x + 1].conj().T + pairing_gamma * ann[x] @ ann[x + 1]
        ham += term + term.conj().T
    jumps = [np.sqrt(gamma_left) * ann[0], np.sqrt(gamma_right) * ann[n - 1]]
    if delta > 0:
        for x in range(n):
            jumps.append(np.sqrt(delta) * ann[x])
            jumps.append(np.sqrt(delta) * ann[x].conj().T)
    return ham, jumps


def dense_fermion_generator(ham: np.ndarray, jumps) -> LindbladGenerator:
    """Wrap dense fermionic operators as a full-support Lindblad generator."""
    n_qubits = int(np.log2(ham.shape[0]) + 0.5)
    space = HilbertSpec((2,) * n_qubits)
    sites = tuple(range(n_qubits))
    return LindbladGenerator(
        space,
        [LocalOperator(ham, sites)],
        [LocalOperator(j, sites) for j in jumps],
    )


# ---------------------------------------------------------------------------
# Circuit helpers and oracles for the encoding tests.


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR with the phase convention fixed."""
    q, r = np.linalg.qr(rand_complex(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_round_circuit(rng: np.random.Generator, qubit_count: int, round_count: int):
    from oqsim.encoder import CircuitRound, RoundCircuit

    rounds = []
    for _ in range(round_count):
        single = haar_unitary(rng, 2)
        doubles = [haar_unitary(rng, 4) for _ in range(qubit_count - 1)]
        rounds.append(CircuitRound(single, doubles))
    return RoundCircuit(qubit_count, rounds)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity through the spectral square root of sigma.

    Eigenvalues below a relative cutoff are zeroed on both passes: the
    numerical null space of a rank-deficient sigma otherwise contributes
    square roots of noise at the 1e-8 scale, right where the convergence
    checks need to resolve.
    """
    w, v = np.linalg.eigh(sigma)
    w = np.where(w > 1e-12 * max(w.max(), 0.0), w, 0.0)
    root = (v * np.sqrt(w)) @ v.conj().T
    vals = np.linalg.eigvalsh(root @ rho @ root)
    vals = np.where(vals > 1e-12 * max(vals.max(), 0.0), vals, 0.0)
    return float(np.sum(np.sqrt(vals))) ** 2


def density_output_z(circuit, output_qubit: int | None = None) -> float:
    """<Z> on the output qubit, evolved as a density matrix.

    Gates are kron-embedded into the full space and conjugated onto rho,
    so this shares no code with the statevector route it checks.
    """
    n = circuit.qubit_count
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    for step in circuit.steps:
        lo = min(step.qubits)
        before = 2 ** (lo - 1)
        after = 2 ** (n - lo - len(step.qubits) + 1)
        u = np.kron(np.kron(np.eye(before), step.matrix), np.eye(after))
        rho = u @ rho @ u.conj().T
    qubit = n if output_qubit is None else output_qubit
    z = np.kron(
        np.kron(np.eye(2 ** (qubit - 1)), np.diag([1.0, -1.0])),
        np.eye(2 ** (n - qubit)),
    )
    return float(np.real(np.trace(rho @ z)))
