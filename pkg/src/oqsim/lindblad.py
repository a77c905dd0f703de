"""Dense Lindblad machinery shared by every other module.

Implements finite-dimensional Lindblad generators

    d/dt rho = -i[H, rho] + sum_a ( L_a rho L_a^dag - 1/2 {L_a^dag L_a, rho} )

together with vectorization, Schroedinger and Heisenberg propagation,
fixed-point solving and trace-norm utilities.

Vectorization convention (used by all modules): vec(|a><b|) = |a> (x) |b>,
i.e. row-major flattening of the matrix, so vec(A X B) = (A (x) B^T) vec(X).

JSON schema for operators and states:

    operator  {"dims": [d_1, ...], "support": [i_1, ...], "entries": [[re, im], ...]}
    density   {"dims": [d_1, ...], "entries": [[re, im], ...]}
    generator {"dims": [...], "hamiltonian_terms": [operator, ...], "jump_terms": [operator, ...]}

Entries are row-major over the matrix on the listed support (operators) or on
the full space (densities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
GAP_TOL = 1e-9

# Dense matrix exponentials are used while the vectorized generator fits in a
# 4096 x 4096 matrix, i.e. Hilbert dimension at most 64.
DENSE_SUPEROP_LIMIT = 4096


class DimensionMismatch(ValueError):
    pass


class DegenerateFixedPoint(RuntimeError):
    """The zero eigenspace of the vectorized generator is not one dimensional."""


class EvolutionFailure(RuntimeError):
    """The adaptive integrator gave up; the message carries its diagnostics."""


def vec(mat: np.ndarray) -> np.ndarray:
    """Row-major vectorization, vec(|a><b|) = |a> (x) |b>."""
    return np.asarray(mat).reshape(-1)


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim)


@dataclass(frozen=True)
class HilbertSpec:
    """Tensor-product space given by per-site dimensions."""

    site_dims: tuple[int, ...]

    def __init__(self, site_dims: Iterable[int]):
        dims = tuple(int(d) for d in site_dims)
        if any(d < 2 for d in dims):
            raise ValueError(f"every site dimension must be >= 2, got {dims}")
        object.__setattr__(self, "site_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(math.prod(self.site_dims))

    @property
    def site_count(self) -> int:
        return len(self.site_dims)

    def support_dim(self, support: Sequence[int]) -> int:
        self._check_support(support)
        return int(math.prod(self.site_dims[i] for i in support))

    def _check_support(self, support: Sequence[int]) -> None:
        if len(set(support)) != len(support):
            raise ValueError(f"support indices must be distinct, got {tuple(support)}")
        for i in support:
            if not 0 <= i < len(self.site_dims):
                raise DimensionMismatch(
                    f"site index {i} outside space with {len(self.site_dims)} sites"
                )


@dataclass(frozen=True)
class LocalOperator:
    """Dense matrix acting on an ordered subset of sites."""

    matrix: np.ndarray
    support: tuple[int, ...]

    def __init__(self, matrix: np.ndarray, support: Iterable[int]):
        mat = np.array(matrix, dtype=complex)
        supp = tuple(int(i) for i in support)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"operator matrix must be square, got {mat.shape}")
        if len(set(supp)) != len(supp):
            raise ValueError(f"support indices must be distinct, got {supp}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "support", supp)

    def embedded(self, space: HilbertSpec) -> np.ndarray:
        return embed(self, space)


def embed(op: LocalOperator, space: HilbertSpec) -> np.ndarray:
    """Embed a local operator into the full space (identity elsewhere)."""
    dims = space.site_dims
    if op.matrix.shape[0] != space.support_dim(op.support):
        raise DimensionMismatch(
            f"operator of dimension {op.matrix.shape[0]} does not match "
            f"support {op.support} with dims {[dims[i] for i in op.support]}"
        )
    rest = [i for i in range(len(dims)) if i not in op.support]
    d_rest = int(math.prod(dims[i] for i in rest))
    full = np.kron(op.matrix, np.eye(d_rest))
    order = list(op.support) + rest
    axis_dims = [dims[i] for i in order]
    tensor = full.reshape(axis_dims + axis_dims)
    inv = np.argsort(order)
    n = len(dims)
    tensor = tensor.transpose(list(inv) + [n + int(p) for p in inv])
    return np.ascontiguousarray(tensor.reshape(space.total_dim, space.total_dim))


class LindbladGenerator:
    """Hamiltonian terms plus jump terms on a shared HilbertSpec.

    Hamiltonian terms must be Hermitian to 1e-12. Jump operators are accepted
    with any norm; the largest spectral norm is reported through
    ``max_jump_norm`` rather than enforced.
    """

    def __init__(
        self,
        space: HilbertSpec,
        hamiltonian_terms: Iterable[LocalOperator] = (),
        jump_terms: Iterable[LocalOperator] = (),
    ):
        self.space = space
        self.hamiltonian_terms = tuple(hamiltonian_terms)
        self.jump_terms = tuple(jump_terms)
        for term in self.hamiltonian_terms:
            dev = np.max(np.abs(term.matrix - term.matrix.conj().T))
            if dev > HERMITICITY_TOL:
                raise ValueError(
                    f"hamiltonian term on support {term.support} deviates from "
                    f"Hermiticity by {dev:.3e}"
                )
        # Trigger dimension checks for every term up front.
        for term in self.hamiltonian_terms + self.jump_terms:
            space.support_dim(term.support)
            if term.matrix.shape[0] != space.support_dim(term.support):
                raise DimensionMismatch(
                    f"term on support {term.support} has dimension {term.matrix.shape[0]}"
                )

    @property
    def jump_count(self) -> int:
        return len(self.jump_terms)

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        total = np.zeros((self.space.total_dim,) * 2, dtype=complex)
        for term in self.hamiltonian_terms:
            total += embed(term, self.space)
        return total

    @cached_property
    def jumps(self) -> tuple[np.ndarray, ...]:
        return tuple(embed(term, self.space) for term in self.jump_terms)

    @cached_property
    def max_jump_norm(self) -> float:
        if not self.jump_terms:
            return 0.0
        return max(
            float(np.linalg.norm(term.matrix, 2)) for term in self.jump_terms
        )

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Action of the generator on a dense operator (Schroedinger picture)."""
        h = self.hamiltonian
        out = -1j * (h @ x - x @ h)
        for jump in self.jumps:
            jd = jump.conj().T
            jdj = jd @ jump
            out += jump @ x @ jd - 0.5 * (jdj @ x + x @ jdj)
        return out

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        """Action of the adjoint generator on an observable (Heisenberg picture)."""
        h = self.hamiltonian
        out = 1j * (h @ x - x @ h)
        for jump in self.jumps:
            jd = jump.conj().T
            jdj = jd @ jump
            out += jd @ x @ jump - 0.5 * (jdj @ x + x @ jdj)
        return out


class DensityMatrix:
    """Validated density matrix.

    Construction checks Hermiticity (1e-12), unit trace (1e-10) and that the
    smallest eigenvalue is >= -1e-8. Violations raise with the measured value;
    nothing is clipped or renormalized silently.
    """

    def __init__(
        self,
        matrix: np.ndarray,
        *,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = PSD_TOL,
    ):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"density matrix must be square, got {mat.shape}")
        herm_dev = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_dev > herm_tol:
            raise ValueError(f"density matrix deviates from Hermiticity by {herm_dev:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix has trace {tr}, expected 1 within {trace_tol:.1e}")
        self.min_eigenvalue = float(
            np.min(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)))
        )
        if self.min_eigenvalue < -psd_tol:
            raise ValueError(
                f"density matrix has smallest eigenvalue {self.min_eigenvalue:.3e}, "
                f"below -{psd_tol:.1e}"
            )
        mat.setflags(write=False)
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, state: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(state, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def basis_state(cls, dim: int, k: int) -> "DensityMatrix":
        psi = np.zeros(dim)
        psi[k] = 1.0
        return cls.pure(psi)


@dataclass
class VectorizedSuperoperator:
    """Matrix acting on vec(rho); side length is total_dim squared."""

    matrix: np.ndarray
    dim: int

    def apply_to(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(x), self.dim)


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, LocalOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def dissipator(a, x, space: HilbertSpec | None = None) -> np.ndarray:
    """Evaluate D_A(X) = A X A^dag - 1/2 {X, A^dag A}.

    ``a`` may be a plain matrix or a LocalOperator; pass ``space`` to embed a
    LocalOperator into the full space first.
    """
    if isinstance(a, LocalOperator) and space is not None:
        a_mat = embed(a, space)
    else:
        a_mat = _as_matrix(a)
    x_mat = _as_matrix(x)
    if a_mat.shape != x_mat.shape:
        raise DimensionMismatch(
            f"operator of shape {a_mat.shape} cannot dissipate state of shape {x_mat.shape}"
        )
    ad = a_mat.conj().T
    ada = ad @ a_mat
    return a_mat @ x_mat @ ad - 0.5 * (ada @ x_mat + x_mat @ ada)


def _superop_matrix(h: np.ndarray, jumps: Sequence[np.ndarray], adjoint: bool) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    sign = 1j if adjoint else -1j
    total = sign * (np.kron(h, eye) - np.kron(eye, h.T))
    for jump in jumps:
        jdj = jump.conj().T @ jump
        if adjoint:
            total += np.kron(jump.conj().T, jump.T)
        else:
            total += np.kron(jump, jump.conj())
        total -= 0.5 * (np.kron(jdj, eye) + np.kron(eye, jdj.T))
    return total


def vectorize(gen: LindbladGenerator) -> VectorizedSuperoperator:
    """Vectorized generator: -i(H_l - H_r) + sum_a (L_{a,l} Ldag_{a,r} - ...)."""
    mat = _superop_matrix(gen.hamiltonian, gen.jumps, adjoint=False)
    return VectorizedSuperoperator(mat, gen.space.total_dim)


def adjoint_generator(gen: LindbladGenerator) -> VectorizedSuperoperator:
    """Vectorized adjoint (Heisenberg) generator; annihilates the identity."""
    mat = _superop_matrix(gen.hamiltonian, gen.jumps, adjoint=True)
    return VectorizedSuperoperator(mat, gen.space.total_dim)


def _integrate(gen: LindbladGenerator, x0: np.ndarray, ts, tol: float, adjoint: bool):
    """RK45 on the flattened operator; returns one matrix per requested time."""
    d = x0.shape[0]
    action = gen.apply_adjoint if adjoint else gen.apply

    def rhs(_t, y):
        return action(y.reshape(d, d)).reshape(-1)

    t_end = float(ts[-1])
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        x0.reshape(-1).astype(complex),
        t_eval=ts,
        method="RK45",
        rtol=tol,
        atol=tol * 1e-2,
    )
    if not sol.success:
        raise EvolutionFailure(
            f"integrator failed at t={sol.t[-1] if len(sol.t) else 0.0}: {sol.message}"
        )
    return [sol.y[:, k].reshape(d, d) for k in range(sol.y.shape[1])]


def _propagate(gen: LindbladGenerator, x0: np.ndarray, ts, tol: float, adjoint: bool):
    d = gen.space.total_dim
    ts = [float(t) for t in ts]
    if any(t < 0 for t in ts):
        raise ValueError("evolution times must be nonnegative")
    if d * d <= DENSE_SUPEROP_LIMIT:
        sup = _superop_matrix(gen.hamiltonian, gen.jumps, adjoint)
        out = []
        prev_t, state = 0.0, x0.reshape(-1)
        steppers: dict[float, np.ndarray] = {}
        for t in ts:
            # Times arrive sorted from the callers; step incrementally and
            # reuse the step propagator on uniform grids.
            dt = round(t - prev_t, 12)
            if dt not in steppers:
                steppers[dt] = scipy.linalg.expm(sup * dt)
            state = steppers[dt] @ state
            prev_t = t
            out.append(state.reshape(d, d))
        return out
    if ts and ts[0] == 0.0:
        tail = _integrate(gen, x0, ts[1:], tol, adjoint) if len(ts) > 1 else []
        return [x0.copy()] + tail
    return _integrate(gen, x0, ts, tol, adjoint)


def evolve(gen: LindbladGenerator, rho0, t: float, tol: float = 1e-9) -> DensityMatrix:
    """Propagate rho0 to e^{Lt}(rho0).

    Dense matrix exponential while the vectorized generator fits in a
    4096 x 4096 matrix, adaptive RK45 on vec(rho) beyond that. The trace is
    never renormalized; drift beyond tolerance raises.
    """
    rho = _as_matrix(rho0)
    out = _propagate(gen, rho, [t], tol, adjoint=False)[0]
    return DensityMatrix(
        out,
        herm_tol=max(HERMITICITY_TOL, 10 * tol),
        trace_tol=max(TRACE_TOL, 10 * tol),
        psd_tol=max(PSD_TOL, 10 * tol),
    )


def evolve_times(gen: LindbladGenerator, rho0, ts, tol: float = 1e-9) -> list[np.ndarray]:
    """Propagated matrices at each time in the sorted sequence ``ts``."""
    return _propagate(gen, _as_matrix(rho0), ts, tol, adjoint=False)


def heisenberg_evolve(gen: LindbladGenerator, obs, t: float, tol: float = 1e-9) -> np.ndarray:
    """Heisenberg-picture evolution e^{Ldag t}(O); returns a plain matrix."""
    if isinstance(obs, LocalOperator):
        obs = embed(obs, gen.space)
    return _propagate(gen, _as_matrix(obs), [t], tol, adjoint=True)[0]


def trace_norm_distance(a, b) -> float:
    """Schatten 1-norm of the difference, via singular values."""
    am, bm = _as_matrix(a), _as_matrix(b)
    if am.shape != bm.shape:
        raise DimensionMismatch(f"shape mismatch {am.shape} vs {bm.shape}")
    return float(np.sum(np.linalg.svd(am - bm, compute_uv=False)))


def trace_norm(a) -> float:
    return float(np.sum(np.linalg.svd(_as_matrix(a), compute_uv=False)))


def fixed_point(
    gen: LindbladGenerator,
    gap_tol: float = GAP_TOL,
    t_cap: float = 1e4,
) -> tuple[DensityMatrix, float]:
    """Unique fixed point and spectral gap of the generator.

    Dense eigensolve of the vectorized generator when it fits; otherwise
    long-time evolution from the maximally mixed state until the residual
    ||L(rho)||_1 drops below 1e-9, with ``t_cap`` as a hard cap.

    Raises:
        DegenerateFixedPoint: more than one eigenvalue within ``gap_tol`` of
            zero, i.e. the steady state is not unique at that resolution.
    """
    d = gen.space.total_dim
    if d * d <= DENSE_SUPEROP_LIMIT:
        sup = _superop_matrix(gen.hamiltonian, gen.jumps, adjoint=False)
        evals, evecs = scipy.linalg.eig(sup)
        near_zero = np.abs(evals) <= gap_tol
        n_zero = int(np.sum(near_zero))
        if n_zero != 1:
            raise DegenerateFixedPoint(
                f"{n_zero} eigenvalues within {gap_tol:.1e} of zero"
            )
        idx = int(np.argmax(near_zero))
        rho = evecs[:, idx].reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr) < 1e-12:
            raise DegenerateFixedPoint("zero-eigenvalue eigenvector is traceless")
        rho = rho / tr
        gap = float(-np.max(evals[~near_zero].real))
        return DensityMatrix(rho, herm_tol=1e-9, trace_tol=1e-9, psd_tol=1e-7), gap

    # Large path: relax the maximally mixed state and watch the residual decay.
    rho = np.eye(d) / d
    residual = trace_norm(gen.apply(rho))
    t_done, window = 0.0, 1.0
    gap_estimate = float("nan")
    while residual > 1e-9:
        if t_done >= t_cap:
            raise EvolutionFailure(
                f"fixed point not reached: residual {residual:.3e} after t={t_done} "
                f"(hard cap {t_cap})"
            )
        rho = _propagate(gen, rho, [window], 1e-12, adjoint=False)[0]
        t_done += window
        new_residual = trace_norm(gen.apply(rho))
        if 0 < new_residual < residual:
            gap_estimate = float(np.log(residual / new_residual) / window)
        residual = new_residual
        window = min(2 * window, t_cap - t_done) if t_done < t_cap else window
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return DensityMatrix(rho, herm_tol=1e-8, trace_tol=1e-8, psd_tol=1e-7), gap_estimate


def partial_trace(mat: np.ndarray, space: HilbertSpec, keep: Sequence[int]) -> np.ndarray:
    """Trace out every site not listed in ``keep`` (order of ``keep`` preserved)."""
    dims = space.site_dims
    keep = list(keep)
    space._check_support(keep)
    n = len(dims)
    tensor = np.asarray(mat).reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    for k, site in enumerate(drop):
        ax = site - sum(1 for j in drop[:k] if j < site)
        offset = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=ax, axis2=ax + offset)
    d_keep = int(math.prod(dims[i] for i in keep))
    # Remaining axes follow the original site order; permute to match ``keep``.
    kept_sorted = sorted(keep)
    perm = [kept_sorted.index(i) for i in keep]
    m = len(keep)
    tensor = tensor.transpose(perm + [m + p for p in perm])
    return tensor.reshape(d_keep, d_keep)


# ---------------------------------------------------------------------------
# JSON serialization


def _entries(mat: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(mat).ravel()]


def _from_entries(entries, dim: int) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in entries])
    if flat.size != dim * dim:
        raise ValueError(f"expected {dim * dim} entries, got {flat.size}")
    return flat.reshape(dim, dim)


def operator_to_json(op: LocalOperator, space: HilbertSpec) -> dict:
    return {
        "dims": list(space.site_dims),
        "support": list(op.support),
        "entries": _entries(op.matrix),
    }


def operator_from_json(data: dict) -> tuple[LocalOperator, HilbertSpec]:
    space = HilbertSpec(data["dims"])
    support = tuple(data["support"])
    dim = space.support_dim(support)
    return LocalOperator(_from_entries(data["entries"], dim), support), space


def density_to_json(rho: DensityMatrix, space: HilbertSpec) -> dict:
    return {"dims": list(space.site_dims), "entries": _entries(rho.matrix)}


def density_from_json(data: dict) -> tuple[DensityMatrix, HilbertSpec]:
    space = HilbertSpec(data["dims"])
    return DensityMatrix(_from_entries(data["entries"], space.total_dim)), space


def generator_to_json(gen: LindbladGenerator) -> dict:
    return {
        "dims": list(gen.space.site_dims),
        "hamiltonian_terms": [
            {"support": list(t.support), "entries": _entries(t.matrix)}
            for t in gen.hamiltonian_terms
        ],
        "jump_terms": [
            {"support": list(t.support), "entries": _entries(t.matrix)}
            for t in gen.jump_terms
        ],
    }


def generator_from_json(data: dict) -> LindbladGenerator:
    space = HilbertSpec(data["dims"])

    def load(item):
        support = tuple(item["support"])
        dim = space.support_dim(support)
        return LocalOperator(_from_entries(item["entries"], dim), support)

    return LindbladGenerator(
        space,
        hamiltonian_terms=[load(t) for t in data.get("hamiltonian_terms", [])],
        jump_terms=[load(t) for t in data.get("jump_terms", [])],
    )
