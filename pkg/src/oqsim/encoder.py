"""Circuit-to-Lindbladian encodings driven by a clock register.

A layered circuit on N qubits is mapped to a pure-jump Lindbladian whose
unique attracting state stores the whole gate history: a uniform mixture
of the partial computations, tagged by the position of a clock register.
Reset jumps pin the data qubits to |0> while the clock sits ahead of the
step that first touches them, and hopping jumps advance the clock while
applying the corresponding gate. The module also carries the spectral
toolbox for the effective clock walk (a tridiagonal hopping matrix) and
the convergence constants quoted for this construction.
"""

from __future__ import annotations

import dataclasses
import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .lindblad import (
    DensityMatrix,
    HilbertSpec,
    LindbladGenerator,
    LocalOperator,
)

UNITARITY_TOL = 1e-12
MAX_REFERENCE_QUBITS = 12


def _as_unitary(mat, dim: int, what: str) -> np.ndarray:
    m = np.array(mat, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"{what} must be {dim}x{dim}, got {m.shape}")
    dev = float(np.max(np.abs(m.conj().T @ m - np.eye(dim))))
    if dev > UNITARITY_TOL:
        raise ValueError(f"{what} deviates from unitarity by {dev:.3e}")
    m.setflags(write=False)
    return m


@dataclasses.dataclass(frozen=True)
class CircuitRound:
    """One round: a gate on qubit 1, then gates on (1,2), (2,3), ...

    ``single`` is the 2x2 gate on the first qubit; ``doubles[y-1]`` is the
    4x4 gate on the pair (y, y+1), with qubit y the more significant index.
    """

    single: np.ndarray
    doubles: tuple[np.ndarray, ...]

    def __init__(self, single, doubles: Iterable = ()):
        object.__setattr__(self, "single", _as_unitary(single, 2, "single-qubit gate"))
        object.__setattr__(
            self,
            "doubles",
            tuple(_as_unitary(g, 4, "two-qubit gate") for g in doubles),
        )


@dataclasses.dataclass(frozen=True)
class CircuitStep:
    """A flattened time-step: the gate matrix and the 1-based qubits it acts on."""

    qubits: tuple[int, ...]
    matrix: np.ndarray


@dataclasses.dataclass(frozen=True)
class RoundCircuit:
    """Layered circuit with a fixed per-round gate pattern.

    Qubits are numbered 1..N top to bottom. Every round contributes N
    flattened steps (one single-qubit gate, then the neighbour pairs
    (1,2), (2,3), ... in order), so a circuit with R rounds has T = N*R
    steps in total.
    """

    qubit_count: int
    rounds: tuple[CircuitRound, ...]

    def __init__(self, qubit_count: int, rounds: Iterable[CircuitRound]):
        n = int(qubit_count)
        if n < 1:
            raise ValueError(f"qubit_count must be positive, got {qubit_count}")
        rds = tuple(rounds)
        for k, rnd in enumerate(rds):
            if not isinstance(rnd, CircuitRound):
                raise TypeError(f"round {k} is not a CircuitRound")
            if len(rnd.doubles) != n - 1:
                raise ValueError(
                    f"round {k} has {len(rnd.doubles)} two-qubit gates, "
                    f"expected {n - 1} for {n} qubits"
                )
        object.__setattr__(self, "qubit_count", n)
        object.__setattr__(self, "rounds", rds)

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    @property
    def step_count(self) -> int:
        """Total number of flattened steps, N * R."""
        return self.qubit_count * len(self.rounds)

    @cached_property
    def steps(self) -> tuple[CircuitStep, ...]:
        """Flattened steps in firing order."""
        out = []
        for rnd in self.rounds:
            out.append(CircuitStep((1,), rnd.single))
            for y, gate in enumerate(rnd.doubles, start=1):
                out.append(CircuitStep((y, y + 1), gate))
        return tuple(out)

    @classmethod
    def identity(cls, qubit_count: int, round_count: int) -> "RoundCircuit":
        """All-identity circuit with the standard round pattern."""
        rnd = CircuitRound(np.eye(2), (np.eye(4),) * (qubit_count - 1))
        return cls(qubit_count, (rnd,) * round_count)

    def to_json_dict(self) -> dict:
        def entries(m):
            return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]

        return {
            "qubit_count": self.qubit_count,
            "rounds": [
                {
                    "single": entries(rnd.single),
                    "doubles": [entries(g) for g in rnd.doubles],
                }
                for rnd in self.rounds
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RoundCircuit":
        def matrix(entries, dim):
            flat = np.array([complex(re, im) for re, im in entries])
            if flat.size != dim * dim:
                raise ValueError(f"expected {dim * dim} entries, got {flat.size}")
            return flat.reshape(dim, dim)

        rounds = tuple(
            CircuitRound(
                matrix(rnd["single"], 2),
                tuple(matrix(g, 4) for g in rnd["doubles"]),
            )
            for rnd in data["rounds"]
        )
        return cls(int(data["qubit_count"]), rounds)


def _apply_gate(state: np.ndarray, step: CircuitStep) -> np.ndarray:
    """Apply a step to a statevector shaped (2,)*n; qubit 1 is axis 0."""
    axes = [q - 1 for q in step.qubits]
    k = len(axes)
    gate = step.matrix.reshape((2,) * (2 * k))
    state = np.tensordot(gate, state, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(state, list(range(k)), axes)


def _step_statevector(
    steps: Sequence[CircuitStep], qubit_count: int, upto: int | None = None
) -> np.ndarray:
    if qubit_count > MAX_REFERENCE_QUBITS:
        raise ValueError(
            f"statevector reference limited to {MAX_REFERENCE_QUBITS} qubits, "
            f"got {qubit_count}"
        )
    chosen = steps if upto is None else steps[:upto]
    state = np.zeros((2,) * qubit_count, dtype=complex)
    state[(0,) * qubit_count] = 1.0
    for step in chosen:
        state = _apply_gate(state, step)
    return state.reshape(-1)


def circuit_statevector(circuit: RoundCircuit, upto: int | None = None) -> np.ndarray:
    """Statevector after the first ``upto`` flattened steps (all by default)."""
    return _step_statevector(circuit.steps, circuit.qubit_count, upto)


def reference_output_z(circuit: RoundCircuit, output_qubit: int | None = None) -> float:
    """Expectation of Z on the output qubit after running the circuit on |0...0>.

    The output qubit defaults to the last one. Only circuits small enough
    for a direct statevector simulation are accepted.
    """
    n = circuit.qubit_count
    qubit = n if output_qubit is None else int(output_qubit)
    if not 1 <= qubit <= n:
        raise ValueError(f"output qubit {qubit} outside 1..{n}")
    amp = circuit_statevector(circuit).reshape((2,) * n)
    probs = np.abs(np.moveaxis(amp, qubit - 1, 0)) ** 2
    p0 = float(np.sum(probs[0]))
    p1 = float(np.sum(probs[1]))
    return p0 - p1


# ---------------------------------------------------------------------------
# Clock-register encoding


@dataclasses.dataclass(frozen=True)
class ClockEncoding:
    """Jump inventory of the clock-register encoding of one step sequence.

    The space is N qubits followed by a (T+1)-level clock. ``init_jumps``
    reset qubit alpha to |0> while the clock sits strictly before the first
    step acting on that qubit, and ``step_jumps`` hop the clock s-1 -> s
    while applying gate s (each hop carries its reverse, so the operator is
    Hermitian up to the gate).
    """

    qubit_count: int
    steps: tuple[CircuitStep, ...]
    space: HilbertSpec
    init_jumps: tuple[LocalOperator, ...]
    step_jumps: tuple[LocalOperator, ...]

    @property
    def step_count(self) -> int:
        return len(self.steps)

    @property
    def clock_dim(self) -> int:
        return len(self.steps) + 1

    @cached_property
    def generator(self) -> LindbladGenerator:
        return LindbladGenerator(
            self.space, jump_terms=self.init_jumps + self.step_jumps
        )

    def history_state(self, s: int) -> np.ndarray:
        """Data-qubit statevector after the first s steps."""
        if not 0 <= s <= self.step_count:
            raise ValueError(f"step {s} outside 0..{self.step_count}")
        return _step_statevector(self.steps, self.qubit_count, upto=s)

    def initial_state(self) -> DensityMatrix:
        """|0...0> on the data qubits with the clock at zero."""
        d = self.space.total_dim
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return DensityMatrix(rho)

    def fixed_point_state(self) -> DensityMatrix:
        """Uniform mixture of the clock-tagged history states."""
        t_max = self.step_count
        d = self.space.total_dim
        rho = np.zeros((d, d), dtype=complex)
        for s in range(t_max + 1):
            phi = self.history_state(s)
            clock = np.zeros((t_max + 1, t_max + 1))
            clock[s, s] = 1.0
            rho += np.kron(np.outer(phi, phi.conj()), clock)
        return DensityMatrix(rho / (t_max + 1))


def _normalize_steps(circuit, qubit_count) -> tuple[int, tuple[CircuitStep, ...]]:
    if isinstance(circuit, RoundCircuit):
        if qubit_count not in (None, circuit.qubit_count):
            raise ValueError(
                f"qubit_count {qubit_count} disagrees with the circuit's "
                f"{circuit.qubit_count}"
            )
        return circuit.qubit_count, circuit.steps
    if qubit_count is None:
        raise ValueError("qubit_count is required for a bare step sequence")
    n = int(qubit_count)
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    steps = []
    for pos, raw in enumerate(circuit, start=1):
        if isinstance(raw, CircuitStep):
            qubits, mat = raw.qubits, raw.matrix
        else:
            qubits, mat = raw
        if isinstance(qubits, (int, np.integer)):
            qubits = (qubits,)
        qubits = tuple(int(q) for q in qubits)
        if len(qubits) not in (1, 2) or len(set(qubits)) != len(qubits):
            raise ValueError(f"step {pos} must act on one or two distinct qubits")
        if any(not 1 <= q <= n for q in qubits):
            raise ValueError(f"step {pos} acts outside qubits 1..{n}")
        steps.append(
            CircuitStep(qubits, _as_unitary(mat, 2 ** len(qubits), f"gate {pos}"))
        )
    return n, tuple(steps)


def encode_clock(circuit, qubit_count: int | None = None) -> ClockEncoding:
    """Clock-register Lindbladian encoding of a circuit.

    Accepts a RoundCircuit, or any sequence of steps (CircuitStep objects
    or (qubits, matrix) pairs) together with an explicit ``qubit_count``.
    Raises ValueError for an empty circuit (the clock would have nowhere
    to go).
    """
    n, steps = _normalize_steps(circuit, qubit_count)
    t_max = len(steps)
    if t_max == 0:
        raise ValueError("cannot encode a circuit with zero steps")
    space = HilbertSpec((2,) * n + (t_max + 1,))
    clock_site = n

    first_touch: dict[int, int] = {}
    for s, step in enumerate(steps, start=1):
        for q in step.qubits:
            first_touch.setdefault(q, s)

    reset = np.zeros((2, 2))
    reset[0, 1] = 1.0
    init_jumps = []
    for alpha in range(1, n + 1):
        window = np.zeros((t_max + 1, t_max + 1))
        for t in range(first_touch.get(alpha, t_max + 1)):
            window[t, t] = 1.0
        init_jumps.append(
            LocalOperator(np.kron(reset, window), (alpha - 1, clock_site))
        )

    step_jumps = []
    for s, step in enumerate(steps, start=1):
        hop = np.zeros((t_max + 1, t_max + 1))
        hop[s, s - 1] = 1.0
        mat = np.kron(step.matrix, hop) + np.kron(step.matrix.conj().T, hop.T)
        support = tuple(q - 1 for q in step.qubits) + (clock_site,)
        step_jumps.append(LocalOperator(mat, support))

    return ClockEncoding(n, steps, space, tuple(init_jumps), tuple(step_jumps))


def clock_convergence_constants(qubit_count: int, step_count: int) -> tuple[float, float]:
    """Convergence constants (c0, a0) for the clock encoding.

    Convergence to the fixed point is bounded by c0 * exp(-a0 * t) in trace
    distance, with

        c0 = 64 sqrt(T+1) N^4 2^(9N/2),
        a0 = 4/(T+1) sin^2(pi / (2(T+1))).

    The rate comes from the gap of the tridiagonal clock walk divided by
    the clock length; the prefactor is loose by design.
    """
    n = int(qubit_count)
    t_max = int(step_count)
    if n < 1 or t_max < 1:
        raise ValueError("need at least one qubit and one step")
    c0 = 64.0 * math.sqrt(t_max + 1) * n**4 * 2.0 ** (4.5 * n)
    a0 = 4.0 / (t_max + 1) * math.sin(math.pi / (2 * (t_max + 1))) ** 2
    return c0, a0


# ---------------------------------------------------------------------------
# Tridiagonal clock walk


def tridiagonal_walk_matrix(k: int) -> np.ndarray:
    """Hopping-minus-occupation matrix of the k-site clock walk.

    Sum over edges (i, i+1) of |i><i+1| + |i+1><i| - |i><i| - |i+1><i+1|,
    i.e. the negative graph Laplacian of the path. k = 1 gives the 1x1
    zero matrix.
    """
    if k < 1:
        raise ValueError(f"need at least one site, got {k}")
    m = np.zeros((k, k))
    for i in range(k - 1):
        m[i, i + 1] += 1.0
        m[i + 1, i] += 1.0
        m[i, i] -= 1.0
        m[i + 1, i + 1] -= 1.0
    return m


def tridiagonal_spectrum(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigensystem of the k-site clock walk.

    Returns (values, vectors) with values[n] = -4 sin^2(n pi / 2k) and
    vectors[:, n] the orthonormal cosine modes

        v_n[m] = sqrt(2/k) cos(pi n (m + 1/2) / k),  n >= 1,

    and the uniform vector at n = 0. Eigenvalues are listed in mode order,
    so they decrease from 0 towards -4.
    """
    if k < 1:
        raise ValueError(f"need at least one site, got {k}")
    modes = np.arange(k)
    values = -4.0 * np.sin(modes * math.pi / (2 * k)) ** 2
    sites = np.arange(k)
    vectors = np.cos(math.pi * np.outer(sites + 0.5, modes) / k) * math.sqrt(2.0 / k)
    vectors[:, 0] = 1.0 / math.sqrt(k)
    return values, vectors
