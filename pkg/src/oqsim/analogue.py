"""Ancilla-based analogue simulator encoding and its error diagnostics.

A target Lindbladian with M jump operators is encoded into a simulator
Lindbladian on system (x) M ancilla qubits,

    L_omega = -i omega^2 [H_sys, .] - i omega [sum_a V_a, .] + 4 sum_a D_{sigma_a},

with V_a = L_a sigma_a^dag + L_a^dag sigma_a and sigma_a the lowering operator
of ancilla a. Hardware noise enters as L_{omega,delta} = L_omega +
delta sum_b N_b with each N_b a local Lindbladian of diamond norm at most 1.

The module also evaluates the exact remainder decomposition

    R(t) = d/dt Tr_A rho(t) - omega^2 L Tr_A rho(t)

term by term (q_a, Q^(1..4), and the noisy K^(0..2) corrections), together
with the ancilla excitation norms and their rigorous bounds. All times in
trajectories and diagnostics are simulator-frame times; target time t
corresponds to simulator time t / omega^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from oqsim.lindblad import (
    DensityMatrix,
    DimensionMismatch,
    HilbertSpec,
    LindbladGenerator,
    LocalOperator,
    _superop_matrix,
    embed,
    evolve_times,
    partial_trace,
    trace_norm,
)

SIGMA_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
DAMPING_RATE = 4.0

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class EncodingError(ValueError):
    pass


class ExcitationBoundViolation(RuntimeError):
    """A rigorous ancilla-excitation bound failed beyond numerical slack."""


class InsufficientSampling(ValueError):
    """Trajectory grid too coarse for the requested diagnostics."""


# ---------------------------------------------------------------------------
# Noise models


@dataclass(frozen=True)
class NoiseTerm:
    """One local noise Lindbladian N_b with a recorded diamond-norm bound.

    ``normalization`` is the analytic scaling factor that was applied to bring
    the diamond norm below 1; ``diamond_bound`` is the recorded bound itself.
    """

    label: str
    support: tuple[int, ...]
    hamiltonian: np.ndarray | None
    jumps: tuple[np.ndarray, ...]
    diamond_bound: float
    normalization: float

    def generator_action(self, x: np.ndarray, space: HilbertSpec) -> np.ndarray:
        """Dense action of N_b on an operator of the full space."""
        out = np.zeros_like(x)
        if self.hamiltonian is not None:
            h = embed(LocalOperator(self.hamiltonian, self.support), space)
            out += -1j * (h @ x - x @ h)
        for jump in self.jumps:
            j = embed(LocalOperator(jump, self.support), space)
            jd = j.conj().T
            jdj = jd @ j
            out += j @ x @ jd - 0.5 * (jdj @ x + x @ jdj)
        return out


def dephasing_noise(site: int) -> NoiseTerm:
    # (1/2)(Z X Z - X); the factor 1/2 brings the diamond norm to exactly 1.
    return NoiseTerm(
        "dephasing", (site,), None, (PAULI["z"] / math.sqrt(2.0),), 1.0, 0.5
    )


def amplitude_damping_noise(site: int) -> NoiseTerm:
    return NoiseTerm(
        "amplitude-damping", (site,), None, (SIGMA_LOWER / math.sqrt(2.0),), 1.0, 0.5
    )


def depolarizing_noise(site: int) -> NoiseTerm:
    # (1/2)(Tr(X) I/2 - X) = sum_{P in {X,Y,Z}} D_{P/sqrt(8)}(X).
    jumps = tuple(PAULI[p] / math.sqrt(8.0) for p in ("x", "y", "z"))
    return NoiseTerm("depolarizing", (site,), None, jumps, 1.0, 0.5)


def coherent_noise(site: int, axis: str = "z") -> NoiseTerm:
    # -i[P/2, X]; ||-i[v,.]||_diamond <= 2||v|| = 1.
    return NoiseTerm(f"coherent-{axis}", (site,), PAULI[axis] / 2.0, (), 1.0, 0.5)


def custom_noise(
    label: str,
    support: Sequence[int],
    hamiltonian: np.ndarray | None = None,
    jumps: Iterable[np.ndarray] = (),
) -> NoiseTerm:
    """User-supplied noise term; the diamond norm gets a crude upper bound.

    The bound is 2 * (spectral norm of the vectorized generator on the
    support subspace), which is loose; a warning records that.
    """
    jumps = tuple(np.asarray(j, dtype=complex) for j in jumps)
    dim = jumps[0].shape[0] if jumps else np.asarray(hamiltonian).shape[0]
    h = np.zeros((dim, dim), dtype=complex) if hamiltonian is None else np.asarray(hamiltonian)
    sup = _superop_matrix(h, jumps, adjoint=False)
    bound = 2.0 * float(np.linalg.norm(sup, 2))
    warnings.warn(
        f"noise term '{label}': diamond norm bounded crudely by "
        f"2*||superoperator|| = {bound:.3g}; prescale the term if this exceeds 1",
        stacklevel=2,
    )
    return NoiseTerm(label, tuple(support), hamiltonian, jumps, bound, 1.0)


@dataclass(frozen=True)
class NoiseModel:
    """delta-scaled collection of local noise Lindbladians.

    ``z_prime`` is the overlap degree Z': the largest number of noise supports
    plus interaction supports any single noise support intersects. If given it
    must dominate the computed count; if omitted it is computed on attachment.
    """

    delta: float
    terms: tuple[NoiseTerm, ...]
    z_prime: int | None = None

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("noise rate delta must be nonnegative")
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.diamond_bound > 1.0 + 1e-6:
                raise ValueError(
                    f"noise term '{term.label}' has recorded diamond bound "
                    f"{term.diamond_bound:.3g} > 1; rescale it first"
                )

    def computed_overlap(self, interaction_supports: Sequence[Sequence[int]]) -> int:
        worst = 0
        for term in self.terms:
            s = set(term.support)
            count = sum(1 for other in self.terms if s & set(other.support))
            count += sum(1 for sa in interaction_supports if s & set(sa))
            worst = max(worst, count)
        return worst


# ---------------------------------------------------------------------------
# Simulator generator


class SimulatorGenerator:
    """System (x) ancilla Lindbladian of the analogue encoding.

    Ancilla qubit a sits at site index (system sites + a), ordered by jump
    term, so partial traces over the ancilla register are reproducible. The
    ancilla damping rate is fixed at 4.
    """

    damping_rate = DAMPING_RATE

    def __init__(
        self,
        target: LindbladGenerator,
        omega: float,
        noise: NoiseModel | None = None,
    ):
        if omega <= 0:
            raise EncodingError("omega must be positive")
        if target.jump_count == 0:
            raise EncodingError("target has no jump terms; nothing to encode")
        self.target = target
        self.omega = float(omega)
        self.noise = noise

        n = target.space.site_count
        m = target.jump_count
        self.system_sites = tuple(range(n))
        self.ancilla_sites = tuple(range(n, n + m))
        self.combined_space = HilbertSpec(target.space.site_dims + (2,) * m)

        h_terms = [
            LocalOperator(self.omega**2 * t.matrix, t.support)
            for t in target.hamiltonian_terms
        ]
        self.interaction_supports: list[tuple[int, ...]] = []
        for alpha, jump in enumerate(target.jump_terms):
            anc = n + alpha
            v = np.kron(jump.matrix, SIGMA_LOWER.conj().T) + np.kron(
                jump.matrix.conj().T, SIGMA_LOWER
            )
            support = jump.support + (anc,)
            self.interaction_supports.append(support)
            h_terms.append(LocalOperator(self.omega * v, support))
        # Rate-4 damping carried by jump operators 2*sigma_a.
        jump_list = [
            LocalOperator(2.0 * SIGMA_LOWER, (n + alpha,)) for alpha in range(m)
        ]

        if noise is not None:
            limit = self.combined_space.site_count
            for term in noise.terms:
                if any(not 0 <= s < limit for s in term.support):
                    raise DimensionMismatch(
                        f"noise term '{term.label}' support {term.support} outside "
                        f"the combined space of {limit} sites"
                    )
            computed = noise.computed_overlap(self.interaction_supports)
            if noise.z_prime is None:
                self._z_prime = computed
            elif noise.z_prime < computed:
                raise ValueError(
                    f"declared z_prime={noise.z_prime} below computed overlap "
                    f"degree {computed}"
                )
            else:
                self._z_prime = int(noise.z_prime)
            for term in noise.terms:
                if term.hamiltonian is not None:
                    h_terms.append(
                        LocalOperator(noise.delta * term.hamiltonian, term.support)
                    )
                root = math.sqrt(noise.delta)
                for jump in term.jumps:
                    jump_list.append(LocalOperator(root * jump, term.support))

        self.generator = LindbladGenerator(
            self.combined_space, h_terms, jump_list
        )

    @property
    def ancilla_count(self) -> int:
        return len(self.ancilla_sites)

    @property
    def delta(self) -> float:
        return 0.0 if self.noise is None else self.noise.delta

    @property
    def z_prime(self) -> int:
        return 0 if self.noise is None else self._z_prime

    def ancilla_operator(self, alpha: int, local: np.ndarray) -> np.ndarray:
        return embed(
            LocalOperator(local, (self.ancilla_sites[alpha],)), self.combined_space
        )

    def initial_state(self, rho_sys: np.ndarray) -> np.ndarray:
        anc = np.zeros((2 ** self.ancilla_count,) * 2, dtype=complex)
        anc[0, 0] = 1.0
        return np.kron(np.asarray(rho_sys, dtype=complex), anc)

    def reduced(self, combined: np.ndarray) -> np.ndarray:
        return partial_trace(combined, self.combined_space, self.system_sites)


def encode(target: LindbladGenerator, omega: float) -> SimulatorGenerator:
    """Build the analogue simulator Lindbladian L_omega for a target."""
    return SimulatorGenerator(target, omega)


def add_noise(sim: SimulatorGenerator, noise: NoiseModel) -> SimulatorGenerator:
    """Attach hardware noise, forming L_{omega,delta} = L_omega + delta sum N_b."""
    return SimulatorGenerator(sim.target, sim.omega, noise)


def run_simulator(
    sim: SimulatorGenerator, rho_sys0, t_target: float, tol: float = 1e-9
) -> DensityMatrix:
    """Evolve for simulator time t_target/omega^2 and trace out the ancillae."""
    rho_sys = rho_sys0.matrix if isinstance(rho_sys0, DensityMatrix) else np.asarray(rho_sys0)
    if t_target < 0:
        raise ValueError("t_target must be nonnegative")
    if t_target == 0:
        return DensityMatrix(rho_sys)
    t_sim = t_target / sim.omega**2
    out = evolve_times(sim.generator, sim.initial_state(rho_sys), [t_sim], tol)[0]
    return DensityMatrix(
        sim.reduced(out),
        herm_tol=max(1e-12, 10 * tol),
        trace_tol=max(1e-10, 10 * tol),
        psd_tol=max(1e-8, 10 * tol),
    )


@dataclass
class Trajectory:
    """Uniformly sampled combined-space states, simulator-frame times."""

    times: np.ndarray
    states: list[np.ndarray]

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0


def simulate_trajectory(
    sim: SimulatorGenerator,
    rho_sys0,
    t_sim: float,
    dt: float = 0.02,
    tol: float = 1e-10,
) -> Trajectory:
    """Sample the combined state on a uniform simulator-time grid up to t_sim."""
    rho_sys = rho_sys0.matrix if isinstance(rho_sys0, DensityMatrix) else np.asarray(rho_sys0)
    steps = max(1, math.ceil(t_sim / dt - 1e-12))
    times = np.arange(steps + 1) * dt
    states = evolve_times(sim.generator, sim.initial_state(rho_sys), times, tol)
    return Trajectory(times, states)


# ---------------------------------------------------------------------------
# Excitation norms (Lemma-2 style bounds)


@dataclass
class ExcitationReport:
    """Trace norms of ancilla-weighted reduced operators and their bounds."""

    times: np.ndarray
    single: np.ndarray      # (n_t, M): ||Tr_A(sigma_a rho)||_1
    pair_dag: np.ndarray    # (n_t, M, M): ||Tr_A(sigma_a^dag sigma_a' rho)||_1
    pair: np.ndarray        # (n_t, M, M): ||Tr_A(sigma_a sigma_a' rho)||_1
    single_bound: float
    pair_bound: float

    @property
    def max_ratio_single(self) -> float:
        return float(np.max(self.single) / self.single_bound)

    @property
    def max_ratio_pair(self) -> float:
        return float(max(np.max(self.pair_dag), np.max(self.pair)) / self.pair_bound)


def ancilla_excitation_norms(
    sim: SimulatorGenerator,
    trajectory: Trajectory,
    enforce: bool = True,
    slack: float = 1e-6,
) -> ExcitationReport:
    """Evaluate ||Tr_A(sigma rho)||_1 tables and assert the rigorous bounds.

    Noiseless bounds are omega/2 and omega^2/4; with noise they relax to
    omega/2 + Z'delta and omega^2/4 + omega Z'delta/2 + Z'delta.
    """
    omega, delta, zp = sim.omega, sim.delta, sim.z_prime
    m = sim.ancilla_count
    sig = [sim.ancilla_operator(a, SIGMA_LOWER) for a in range(m)]
    n_t = len(trajectory.times)
    single = np.zeros((n_t, m))
    pair_dag = np.zeros((n_t, m, m))
    pair = np.zeros((n_t, m, m))
    for i, rho in enumerate(trajectory.states):
        for a in range(m):
            single[i, a] = trace_norm(sim.reduced(sig[a] @ rho))
            for b in range(m):
                pair_dag[i, a, b] = trace_norm(
                    sim.reduced(sig[a].conj().T @ sig[b] @ rho)
                )
                pair[i, a, b] = trace_norm(sim.reduced(sig[a] @ sig[b] @ rho))
    single_bound = omega / 2.0 + zp * delta
    pair_bound = omega**2 / 4.0 + omega * zp * delta / 2.0 + zp * delta
    report = ExcitationReport(
        trajectory.times, single, pair_dag, pair, single_bound, pair_bound
    )
    if enforce:
        worst = max(report.max_ratio_single, report.max_ratio_pair)
        if worst > 1.0 + slack:
            raise ExcitationBoundViolation(
                f"excitation bound exceeded: max ratio {worst:.8f} "
                f"(omega={omega}, delta={delta}, Z'={zp})"
            )
    return report


# ---------------------------------------------------------------------------
# Remainder diagnostics (Lemma-1 decomposition, with noisy corrections)


@dataclass
class RemainderReport:
    """Term-by-term remainder decomposition on the trajectory grid.

    ``term_norms`` maps a term id to the trace norm of its instantaneous
    integrand at each grid time: ``q[a]`` is the norm of the decayed initial
    kick omega^2 e^{-2t} q_a, ``Q1[a]`` .. ``Q4[a,b]`` are the unscaled
    integrand norms of Lemma 1, and ``K0[b]``, ``K1[a,b]``, ``K2[a,b]`` the
    noisy corrections. ``assembled_norm`` and ``finite_difference_norm``
    track the total remainder; the two must agree to ``threshold`` at
    interior grid points (the decomposition is an identity).
    """

    times: np.ndarray
    term_norms: dict[str, np.ndarray]
    q_norms: dict[int, float]
    assembled_norm: np.ndarray
    finite_difference_norm: np.ndarray
    interior: np.ndarray
    max_mismatch: float
    threshold: float

    def to_csv_rows(self) -> list[tuple[float, str, float]]:
        rows = []
        for i, t in enumerate(self.times):
            for term_id, norms in sorted(self.term_norms.items()):
                rows.append((float(t), term_id, float(norms[i])))
            rows.append((float(t), "total", float(self.assembled_norm[i])))
        return rows

    def to_json_summary(self) -> dict:
        return {
            "max_mismatch": self.max_mismatch,
            "threshold": self.threshold,
            "q_norms": {str(k): v for k, v in self.q_norms.items()},
            "max_assembled_norm": float(np.max(self.assembled_norm)),
            "terms": sorted(self.term_norms),
        }


def _exp_convolution(times: np.ndarray, values: list[np.ndarray]) -> list[np.ndarray]:
    """Trapezoid evaluation of int_0^t e^{-2(t-s)} f(s) ds on the grid."""
    dt = float(times[1] - times[0])
    decay = math.exp(-2.0 * dt)
    out = [np.zeros_like(values[0])]
    for k in range(1, len(values)):
        out.append(decay * out[-1] + 0.5 * dt * (decay * values[k - 1] + values[k]))
    return out


def remainder_diagnostics(
    sim: SimulatorGenerator,
    trajectory: Trajectory,
    tol: float = 1e-10,
    strict: bool = True,
) -> RemainderReport:
    """Assemble the exact remainder decomposition and cross-check it.

    The assembled remainder must reproduce the finite-difference remainder
    d/dt Tr_A(rho) - omega^2 L(Tr_A rho) to max(1e-6, 10*tol) at interior
    grid points; a larger mismatch is reported as insufficient sampling.
    """
    times = trajectory.times
    if len(times) < 5:
        raise InsufficientSampling("need at least 5 samples for the cross-check")
    dt = trajectory.spacing
    if dt > 0.05 + 1e-12:
        raise InsufficientSampling(
            f"grid spacing {dt} exceeds the 0.05 simulator-time limit"
        )
    if np.max(np.abs(np.diff(times) - dt)) > 1e-9:
        raise InsufficientSampling("trajectory grid must be uniform")

    omega = sim.omega
    m = sim.ancilla_count
    target = sim.target
    h_sys = embed_sum(target.hamiltonian_terms, target.space)
    jumps = [embed(t, target.space) for t in target.jump_terms]
    sig = [sim.ancilla_operator(a, SIGMA_LOWER) for a in range(m)]
    sig_dag = [s.conj().T for s in sig]
    num = [sd @ s for sd, s in zip(sig_dag, sig)]

    def commutator(a, b):
        return a @ b - b @ a

    def dissip(l_mat, x):
        ld = l_mat.conj().T
        ldl = ld @ l_mat
        return l_mat @ x @ ld - 0.5 * (ldl @ x + x @ ldl)

    reduced = sim.reduced
    states = trajectory.states
    n_t = len(times)

    # q_a = -D_{L_a}(rho(0)); the ancillae start in |0> so Tr_A rho(0) = rho(0).
    rho0_red = reduced(states[0])
    q = [-dissip(jumps[a], rho0_red) for a in range(m)]

    term_values: dict[str, list[np.ndarray]] = {}

    def record(term_id: str, series: list[np.ndarray]):
        term_values[term_id] = series

    red_rho = [reduced(rho) for rho in states]
    red_sig = [[reduced(sig[a] @ rho) for rho in states] for a in range(m)]
    red_sig_dag = [[reduced(sig_dag[a] @ rho) for rho in states] for a in range(m)]
    red_num = [[reduced(num[a] @ rho) for rho in states] for a in range(m)]

    for a in range(m):
        la, lad = jumps[a], jumps[a].conj().T
        q1 = []
        q2 = []
        for i in range(n_t):
            v1 = -(1.0 / omega) * commutator(lad, commutator(h_sys, red_sig[a][i]))
            q1.append(v1 + v1.conj().T)
            v2 = -0.5j * commutator(lad, la @ commutator(h_sys, red_rho[i]))
            q2.append(v2 + v2.conj().T)
        record(f"Q1[{a}]", q1)
        record(f"Q2[{a}]", q2)

    # Signed variants: u = "-" uses L, sigma; u = "+" uses the daggers.
    for a in range(m):
        la, lad = jumps[a], jumps[a].conj().T
        for b in range(m):
            lb, lbd = jumps[b], jumps[b].conj().T
            q3 = []
            for i in range(n_t):
                inner = commutator(lbd, red_sig[b][i]) + commutator(
                    lb, red_sig_dag[b][i]
                )
                q3.append((1.0j / omega) * dissip(la, inner))
            record(f"Q3[{a},{b}]", q3)
            q4 = []
            if a == b:
                for i in range(n_t):
                    x = red_num[a][i]
                    q4.append((2.0 / omega**2) * (dissip(lad, x) - dissip(la, x)))
            else:
                sa = {"-": sig[a], "+": sig_dag[a]}
                sb = {"-": sig[b], "+": sig_dag[b]}
                la_u = {"-": la, "+": lad}
                lb_u = {"-": lb, "+": lbd}
                bar = {"-": "+", "+": "-"}
                for i in range(n_t):
                    total = np.zeros_like(red_rho[0])
                    for u in ("-", "+"):
                        for up in ("-", "+"):
                            red = reduced(sa[bar[u]] @ sb[bar[up]] @ states[i])
                            total -= commutator(la_u[u], commutator(lb_u[up], red))
                    q4.append(total / omega**2)
            record(f"Q4[{a},{b}]", q4)

    noise_terms = () if sim.noise is None else sim.noise.terms
    delta = sim.delta
    k0: dict[int, list[np.ndarray]] = {}
    for b_idx, term in enumerate(noise_terms):
        action = [term.generator_action(rho, sim.combined_space) for rho in states]
        k0[b_idx] = [reduced(n_rho) for n_rho in action]
        record(f"K0[{b_idx}]", k0[b_idx])
        for a in range(m):
            la, lad = jumps[a], jumps[a].conj().T
            k1 = []
            k2 = []
            for i in range(n_t):
                v1 = -1j * commutator(lad, reduced(sig[a] @ action[i]))
                k1.append(v1 + v1.conj().T)
                v2 = 0.5 * commutator(lad, la @ k0[b_idx][i])
                k2.append(v2 + v2.conj().T)
            record(f"K1[{a},{b_idx}]", k1)
            record(f"K2[{a},{b_idx}]", k2)

    # Assemble the remainder on the grid.
    assembled = []
    conv = {tid: _exp_convolution(times, vals) for tid, vals in term_values.items()}
    for i, t in enumerate(times):
        total = omega**2 * math.exp(-2.0 * t) * sum(q)
        for a in range(m):
            total += omega**4 * (conv[f"Q1[{a}]"][i] + conv[f"Q2[{a}]"][i])
            for b in range(m):
                total += omega**4 * (conv[f"Q3[{a},{b}]"][i] + conv[f"Q4[{a},{b}]"][i])
        for b_idx in range(len(noise_terms)):
            total += delta * k0[b_idx][i]
            for a in range(m):
                total += delta * (
                    omega * conv[f"K1[{a},{b_idx}]"][i]
                    + omega**2 * conv[f"K2[{a},{b_idx}]"][i]
                )
        assembled.append(total)

    # Fourth-order central finite difference of the reduced trajectory.
    target_action = [
        naive_target_rhs(h_sys, jumps, red_rho[i]) for i in range(n_t)
    ]
    fd_norm = np.full(n_t, np.nan)
    mismatch = 0.0
    interior = np.zeros(n_t, dtype=bool)
    for i in range(2, n_t - 2):
        deriv = (
            -red_rho[i + 2] + 8 * red_rho[i + 1] - 8 * red_rho[i - 1] + red_rho[i - 2]
        ) / (12.0 * dt)
        fd = deriv - omega**2 * target_action[i]
        fd_norm[i] = trace_norm(fd)
        mismatch = max(mismatch, trace_norm(fd - assembled[i]))
        interior[i] = True

    threshold = max(1e-6, 10.0 * tol)
    if strict and mismatch > threshold:
        raise InsufficientSampling(
            f"assembled remainder deviates from finite difference by "
            f"{mismatch:.3e} > {threshold:.1e}; refine the trajectory grid"
        )

    term_norms = {
        tid: np.array([trace_norm(v) for v in vals])
        for tid, vals in term_values.items()
    }
    term_norms.update(
        {
            f"q[{a}]": omega**2 * np.exp(-2.0 * times) * trace_norm(q[a])
            for a in range(m)
        }
    )
    return RemainderReport(
        times=times,
        term_norms=term_norms,
        q_norms={a: trace_norm(q[a]) for a in range(m)},
        assembled_norm=np.array([trace_norm(v) for v in assembled]),
        finite_difference_norm=fd_norm,
        interior=interior,
        max_mismatch=mismatch,
        threshold=threshold,
    )


def embed_sum(terms: Sequence[LocalOperator], space: HilbertSpec) -> np.ndarray:
    total = np.zeros((space.total_dim,) * 2, dtype=complex)
    for term in terms:
        total += embed(term, space)
    return total


def naive_target_rhs(h: np.ndarray, jumps: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for l_mat in jumps:
        ld = l_mat.conj().T
        ldl = ld @ l_mat
        out += l_mat @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
    return out
