"""Covariance-matrix dynamics for quadratic fermionic Lindbladians.

Majorana convention (0-based mode x): c_{2x} = a_x + a_x^dag and
c_{2x+1} = -i(a_x - a_x^dag), so {c_j, c_k} = 2 delta_{jk}. A quadratic
Hamiltonian is stored as the real antisymmetric coefficient matrix H of
H_op = i sum_{jk} H_{jk} c_j c_k. A linear jump is a column of complex
Majorana coefficients, L_mu = sum_j ell_{j,mu} c_j. A Hermitian quadratic
jump is stored as (M, rate) with jump operator (i/2) sum_{jk} M_{jk} c_j c_k,
M real antisymmetric.

The covariance matrix Gamma_{jk} = (i/2) Tr(rho [c_j, c_k]) obeys the closed
linear equation

    dGamma/dt = A Gamma + Gamma A^T + C
                + sum_h 2 r_h (M_h^2 Gamma + Gamma M_h^2 - 2 M_h Gamma M_h),

with A = 4 H - 2 Re(ell ell^dag) and C = 4 Im(ell ell^dag). The equation is
exact for every model here: commutators of quadratics with quadratics stay
quadratic, so second moments close even for the Hermitian quadratic jumps
(under which the state itself need not stay Gaussian). Occupation
covariances are reported through Gaussian pair contractions of the
four-Majorana expectation, exact for linear-jump models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.integrate import solve_ivp

ANTISYM_TOL = 1e-10
PHYSICALITY_TOL = 1e-8
RESIDUAL_TOL = 1e-10


class NonContractive(RuntimeError):
    """The drift is not strictly stable; no unique steady state is reached."""


def _check_antisymmetric(mat: np.ndarray, what: str, tol: float = ANTISYM_TOL) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {mat.shape}")
    dev = float(np.max(np.abs(mat + mat.T))) if mat.size else 0.0
    if dev > tol:
        raise ValueError(f"{what} deviates from antisymmetry by {dev:.3e}")
    return mat


class CovarianceState:
    """Majorana covariance matrix Gamma_{jk} = (i/2) Tr(rho [c_j, c_k])."""

    def __init__(self, gamma: np.ndarray):
        gamma = _check_antisymmetric(gamma, "covariance matrix")
        if gamma.shape[0] % 2:
            raise ValueError("covariance matrix needs an even dimension")
        spectrum = np.linalg.eigvalsh(1j * gamma)
        if np.max(np.abs(spectrum)) > 1.0 + PHYSICALITY_TOL:
            raise ValueError(
                f"unphysical covariance: |eig(i Gamma)| reaches "
                f"{np.max(np.abs(spectrum)):.10f}"
            )
        self.gamma = 0.5 * (gamma - gamma.T)
        self.mode_count = gamma.shape[0] // 2

    @classmethod
    def vacuum(cls, n: int) -> "CovarianceState":
        return cls.from_occupations([0.0] * n)

    @classmethod
    def from_occupations(cls, occupations: Sequence[float]) -> "CovarianceState":
        occ = [float(v) for v in occupations]
        if any(not 0.0 <= v <= 1.0 for v in occ):
            raise ValueError("occupations must lie in [0, 1]")
        gamma = np.zeros((2 * len(occ), 2 * len(occ)))
        for x, v in enumerate(occ):
            gamma[2 * x, 2 * x + 1] = 2.0 * v - 1.0
            gamma[2 * x + 1, 2 * x] = 1.0 - 2.0 * v
        return cls(gamma)


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """Quadratic fermionic Lindbladian in Majorana coefficients.

    ``hamiltonian_coeffs`` is the real antisymmetric H of
    i sum H_{jk} c_j c_k; ``linear_jumps`` holds one complex column of
    Majorana coefficients per jump; ``hermitian_jumps`` holds (M, rate)
    pairs for jumps (i/2) sum M_{jk} c_j c_k.
    """

    mode_count: int
    hamiltonian_coeffs: np.ndarray
    linear_jumps: np.ndarray
    hermitian_jumps: tuple = ()
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        d = 2 * self.mode_count
        ham = _check_antisymmetric(self.hamiltonian_coeffs, "hamiltonian_coeffs", 1e-12)
        if ham.shape != (d, d):
            raise ValueError(f"hamiltonian_coeffs must be {d}x{d}")
        object.__setattr__(self, "hamiltonian_coeffs", ham)
        jumps = np.asarray(self.linear_jumps, dtype=complex)
        if jumps.ndim != 2 or jumps.shape[0] != d:
            raise ValueError(f"linear_jumps must have {d} rows")
        object.__setattr__(self, "linear_jumps", jumps)
        checked = []
        for mat, rate in self.hermitian_jumps:
            mat = _check_antisymmetric(mat, "hermitian jump matrix", 1e-12)
            if mat.shape != (d, d):
                raise ValueError(f"hermitian jump matrix must be {d}x{d}")
            if rate < 0:
                raise ValueError("hermitian jump rates must be nonnegative")
            checked.append((mat, float(rate)))
        object.__setattr__(self, "hermitian_jumps", tuple(checked))

    @property
    def jump_count(self) -> int:
        return self.linear_jumps.shape[1]

    def json_summary(self) -> dict:
        return {
            "label": self.label,
            "mode_count": self.mode_count,
            "linear_jump_count": self.jump_count,
            "hermitian_jump_count": len(self.hermitian_jumps),
            "params": {k: v for k, v in self.params.items()},
        }


@dataclass(frozen=True)
class FermionObservableReport:
    """Per-mode densities and occupation covariances with model metadata."""

    density: np.ndarray
    covariance: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        diag = np.diagonal(self.covariance)
        if np.any(diag < -1e-9) or np.any(diag > 0.25 + 1e-9):
            raise ValueError(
                "occupation variance outside [0, 1/4]: "
                f"range [{diag.min():.3e}, {diag.max():.3e}]"
            )

    def csv_rows(self) -> list[tuple]:
        rows = [("density", x, x, float(v)) for x, v in enumerate(self.density)]
        n = len(self.density)
        for x in range(n):
            for y in range(n):
                rows.append(("covariance", x, y, float(self.covariance[x, y])))
        return rows


# ---------------------------------------------------------------------------
# Majorana coefficient helpers


def annihilation_coeffs(n: int, x: int) -> np.ndarray:
    """Majorana coefficient column of a_x = (c_{2x} + i c_{2x+1}) / 2."""
    v = np.zeros(2 * n, dtype=complex)
    v[2 * x] = 0.5
    v[2 * x + 1] = 0.5j
    return v


def creation_coeffs(n: int, x: int) -> np.ndarray:
    return annihilation_coeffs(n, x).conj()


def _put(h: np.ndarray, j: int, k: int, val: float) -> None:
    h[j, k] += val
    h[k, j] -= val


def add_hopping(h: np.ndarray, x: int, y: int, amp: complex) -> None:
    """Add amp a_x^dag a_y + conj(amp) a_y^dag a_x to the coefficient matrix."""
    if x == y:
        raise ValueError("hopping needs two distinct modes; use add_chemical")
    amp = complex(amp)
    _put(h, 2 * x, 2 * y + 1, amp.real / 4.0)
    _put(h, 2 * x + 1, 2 * y, -amp.real / 4.0)
    _put(h, 2 * x, 2 * y, amp.imag / 4.0)
    _put(h, 2 * x + 1, 2 * y + 1, amp.imag / 4.0)


def add_pairing(h: np.ndarray, x: int, y: int, amp: complex) -> None:
    """Add amp a_x a_y + conj(amp) a_y^dag a_x^dag (order matters)."""
    if x == y:
        raise ValueError("pairing of a mode with itself vanishes")
    amp = complex(amp)
    _put(h, 2 * x, 2 * y + 1, amp.real / 4.0)
    _put(h, 2 * x + 1, 2 * y, amp.real / 4.0)
    _put(h, 2 * x, 2 * y, amp.imag / 4.0)
    _put(h, 2 * x + 1, 2 * y + 1, -amp.imag / 4.0)


def add_chemical(h: np.ndarray, x: int, mu: float) -> None:
    """Add mu a_x^dag a_x (constants dropped)."""
    _put(h, 2 * x, 2 * x + 1, mu / 4.0)


# ---------------------------------------------------------------------------
# model builders


def build_target_chain(
    n: int,
    K: float = 1.0,
    J: float = 0.5,
    lambda0: float = 1.1,
    lambda1: float = 1.0,
    periodic: bool = True,
) -> QuadraticModel:
    """Fermion chain with hopping K, pairing J and two-site jumps.

    H = sum_x K (a_x^dag a_{x+1} + h.c.) + J (a_x a_{x+1} + h.c.) with one
    jump L_x = lambda0 a_x + lambda1 a_{x+1} per bond; periodic boundaries
    wrap x+1 around the chain.
    """
    if n < 2:
        raise ValueError("the chain needs at least two modes")
    h = np.zeros((2 * n, 2 * n))
    bonds = range(n) if periodic else range(n - 1)
    cols = []
    for x in bonds:
        y = (x + 1) % n
        add_hopping(h, x, y, K)
        add_pairing(h, x, y, J)
        cols.append(lambda0 * annihilation_coeffs(n, x) + lambda1 * annihilation_coeffs(n, y))
    jumps = np.stack(cols, axis=1) if cols else np.zeros((2 * n, 0), dtype=complex)
    return QuadraticModel(
        mode_count=n,
        hamiltonian_coeffs=h,
        linear_jumps=jumps,
        label="target-chain",
        params={
            "n": n,
            "K": K,
            "J": J,
            "lambda0": lambda0,
            "lambda1": lambda1,
            "periodic": periodic,
        },
    )


def build_simulator_chain(target: QuadraticModel, omega: float) -> QuadraticModel:
    """Ancilla-fermion encoding of a linear-jump model.

    One ancilla fermion b per jump, damped at rate 4 (jump operator 2 b),
    with coupling Hamiltonian omega (b^dag L + L^dag b) per jump and the
    system Hamiltonian scaled by omega^2. Ancilla modes are appended after
    the system modes in jump order.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if target.hermitian_jumps:
        raise ValueError("the simulator encoding covers linear-jump models only")
    n, m = target.mode_count, target.jump_count
    if m == 0:
        raise ValueError("the target model has no jump operators to encode")
    total = n + m
    h = np.zeros((2 * total, 2 * total))
    h[: 2 * n, : 2 * n] = omega**2 * target.hamiltonian_coeffs
    cols = []
    for mu in range(m):
        anc = n + mu
        ell = target.linear_jumps[:, mu]
        for j in range(2 * n):
            # b^dag L + L^dag b = i sum_j (Im ell_j c_{2A} c_j - Re ell_j c_{2A+1} c_j)
            if ell[j] != 0:
                _put(h, 2 * anc, j, omega * ell[j].imag / 2.0)
                _put(h, 2 * anc + 1, j, -omega * ell[j].real / 2.0)
        cols.append(2.0 * annihilation_coeffs(total, anc))
    return QuadraticModel(
        mode_count=total,
        hamiltonian_coeffs=h,
        linear_jumps=np.stack(cols, axis=1),
        label="simulator-chain",
        params={**target.params, "omega": omega, "system_modes": n},
    )


def add_depolarizing(
    model: QuadraticModel, delta: float, sites: Iterable[int] | None = None
) -> QuadraticModel:
    """Append per-site depolarizing noise at rate delta.

    Decomposition per mode x: linear jumps sqrt(delta/4) c_{2x} and
    sqrt(delta/4) c_{2x+1} plus the Hermitian quadratic jump
    i c_{2x} c_{2x+1} at rate delta/4, which together realize
    delta (Tr_x(.) otimes I_x/2 - id) on parity-even states.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n = model.mode_count
    sites = range(n) if sites is None else [int(s) for s in sites]
    if any(not 0 <= s < n for s in sites):
        raise ValueError("noise sites outside the model")
    if delta == 0:
        return model
    cols = [model.linear_jumps]
    herms = list(model.hermitian_jumps)
    amp = math.sqrt(delta / 4.0)
    for x in sites:
        c_even = np.zeros(2 * n, dtype=complex)
        c_even[2 * x] = amp
        c_odd = np.zeros(2 * n, dtype=complex)
        c_odd[2 * x + 1] = amp
        cols.append(np.stack([c_even, c_odd], axis=1))
        mat = np.zeros((2 * n, 2 * n))
        _put(mat, 2 * x, 2 * x + 1, 1.0)
        herms.append((mat, delta / 4.0))
    return QuadraticModel(
        mode_count=n,
        hamiltonian_coeffs=model.hamiltonian_coeffs,
        linear_jumps=np.concatenate(cols, axis=1),
        hermitian_jumps=tuple(herms),
        label=model.label + "+depolarizing",
        params={**model.params, "delta": delta, "noise": "depolarizing"},
    )


def add_gain_loss(
    model: QuadraticModel, delta: float, sites: Iterable[int] | None = None
) -> QuadraticModel:
    """Append gain/loss noise pairs sqrt(delta) a_x, sqrt(delta) a_x^dag."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n = model.mode_count
    sites = range(n) if sites is None else [int(s) for s in sites]
    if any(not 0 <= s < n for s in sites):
        raise ValueError("noise sites outside the model")
    if delta == 0:
        return model
    cols = [model.linear_jumps]
    amp = math.sqrt(delta)
    for x in sites:
        cols.append(
            np.stack(
                [amp * annihilation_coeffs(n, x), amp * creation_coeffs(n, x)], axis=1
            )
        )
    return QuadraticModel(
        mode_count=n,
        hamiltonian_coeffs=model.hamiltonian_coeffs,
        linear_jumps=np.concatenate(cols, axis=1),
        hermitian_jumps=model.hermitian_jumps,
        label=model.label + "+gain-loss",
        params={**model.params, "delta": delta, "noise": "gain-loss"},
    )


def build_boundary_chain(
    n: int,
    h: float,
    pairing_gamma: float,
    gamma_left: float,
    gamma_right: float,
    delta: float = 0.0,
    interaction: float = 0.0,
) -> QuadraticModel:
    """Boundary-driven chain with on-site field and nearest-neighbour pairing.

    H = 2h sum_x n_x + sum_x (a_x a_{x+1}^dag + pairing_gamma a_x a_{x+1}
    + h.c.) with open boundaries, loss sqrt(gamma_left) a_1 and
    sqrt(gamma_right) a_n at the ends, and optional bulk gain/loss noise
    pairs at rate delta.
    """
    if n < 2:
        raise ValueError("the chain needs at least two modes")
    if interaction != 0.0:
        raise ValueError(
            "interaction U must be 0: quartic terms are outside the quadratic "
            "covariance formalism"
        )
    if gamma_left < 0 or gamma_right < 0:
        raise ValueError("boundary rates must be nonnegative")
    ham = np.zeros((2 * n, 2 * n))
    for x in range(n):
        add_chemical(ham, x, 2.0 * h)
    for x in range(n - 1):
        # a_x a_{x+1}^dag + h.c. = -(a_x^dag a_{x+1} + h.c.)
        add_hopping(ham, x, x + 1, -1.0)
        add_pairing(ham, x, x + 1, pairing_gamma)
    cols = []
    if gamma_left > 0:
        cols.append(math.sqrt(gamma_left) * annihilation_coeffs(n, 0))
    if gamma_right > 0:
        cols.append(math.sqrt(gamma_right) * annihilation_coeffs(n, n - 1))
    jumps = np.stack(cols, axis=1) if cols else np.zeros((2 * n, 0), dtype=complex)
    model = QuadraticModel(
        mode_count=n,
        hamiltonian_coeffs=ham,
        linear_jumps=jumps,
        label="boundary-chain",
        params={
            "n": n,
            "h": h,
            "pairing_gamma": pairing_gamma,
            "gamma_left": gamma_left,
            "gamma_right": gamma_right,
        },
    )
    if delta > 0:
        model = add_gain_loss(model, delta)
    return model


# ---------------------------------------------------------------------------
# dynamics


def drift_and_drive(model: QuadraticModel) -> tuple[np.ndarray, np.ndarray]:
    """Linear-part coefficients: A = 4H - 2 Re(M), C = 4 Im(M), M = ell ell^dag."""
    m = model.linear_jumps @ model.linear_jumps.conj().T
    a = 4.0 * model.hamiltonian_coeffs - 2.0 * m.real
    c = 4.0 * m.imag
    return a, c


def covariance_eom(model: QuadraticModel, gamma) -> np.ndarray:
    """Right-hand side dGamma/dt of the closed second-moment equation."""
    if isinstance(gamma, CovarianceState):
        gamma = gamma.gamma
    gamma = np.asarray(gamma, dtype=float)
    a, c = drift_and_drive(model)
    out = a @ gamma + gamma @ a.T + c
    for mat, rate in model.hermitian_jumps:
        m2 = mat @ mat
        out += 2.0 * rate * (m2 @ gamma + gamma @ m2 - 2.0 * mat @ gamma @ mat)
    return out


def evolve_covariance(
    model: QuadraticModel,
    state: CovarianceState,
    ts: Sequence[float],
    tol: float = 1e-10,
) -> list[CovarianceState]:
    """Covariance matrices at the sorted times ``ts``.

    Linear-jump models step exactly: affine stepping about the stationary
    covariance when the drift is strictly stable, plain conjugation by
    exp(A dt) when undriven, and the Van Loan block exponential
    exp([[A, C], [0, -A^T]] dt) for marginal drifts. Models with Hermitian
    quadratic jumps integrate the flattened equation adaptively at
    tolerance ``tol``.
    """
    ts = [float(t) for t in ts]
    if any(t < 0 for t in ts):
        raise ValueError("evolution times must be nonnegative")
    if sorted(ts) != ts:
        raise ValueError("evolution times must be sorted")
    d = 2 * model.mode_count
    if state.gamma.shape[0] != d:
        raise ValueError("state dimension does not match the model")
    if not model.hermitian_jumps:
        a, c = drift_and_drive(model)
        have_drive = bool(np.any(c))
        stable = False
        if have_drive:
            stable = float(np.max(np.linalg.eigvals(a).real)) < -1e-12
        gamma_ss = None
        if stable:
            gamma_ss = scipy.linalg.solve_continuous_lyapunov(a, -c)
            gamma_ss = 0.5 * (gamma_ss - gamma_ss.T)

        def stepper(dt: float) -> tuple[np.ndarray, np.ndarray]:
            if not have_drive:
                return scipy.linalg.expm(a * dt), np.zeros((d, d))
            if stable:
                # Gamma(t+dt) = G_ss + F (Gamma - G_ss) F^T stays well scaled
                # for arbitrarily long steps; the Van Loan block would pit
                # e^{+|Re lambda| dt} terms against each other.
                f = scipy.linalg.expm(a * dt)
                return f, gamma_ss - f @ gamma_ss @ f.T
            block = np.zeros((2 * d, 2 * d))
            block[:d, :d] = a
            block[:d, d:] = c
            block[d:, d:] = -a.T
            e = scipy.linalg.expm(block * dt)
            return e[:d, :d], e[:d, d:] @ e[:d, :d].T

        out = []
        steppers: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        gamma, prev = state.gamma, 0.0
        for t in ts:
            dt = round(t - prev, 12)
            if dt not in steppers:
                steppers[dt] = stepper(dt)
            f, j = steppers[dt]
            gamma = f @ gamma @ f.T + j
            gamma = 0.5 * (gamma - gamma.T)
            prev = t
            out.append(CovarianceState(gamma))
        return out

    def rhs(_t, y):
        return covariance_eom(model, y.reshape(d, d)).reshape(-1)

    sol = solve_ivp(
        rhs,
        (0.0, ts[-1] if ts else 0.0),
        state.gamma.reshape(-1),
        t_eval=ts,
        method="RK45",
        rtol=tol,
        atol=tol * 1e-2,
    )
    if not sol.success:
        raise RuntimeError(f"covariance integration failed: {sol.message}")
    out = []
    for k in range(sol.y.shape[1]):
        gamma = sol.y[:, k].reshape(d, d)
        out.append(CovarianceState(0.5 * (gamma - gamma.T)))
    return out


def steady_state_covariance(model: QuadraticModel) -> CovarianceState:
    """Unique stationary covariance of the closed second-moment equation.

    Solves the continuous Lyapunov equation for linear-jump models and the
    sparse vectorized linear system when Hermitian quadratic jumps are
    present; the result is refined until the residual ||dGamma/dt||_F drops
    below 1e-10.

    Raises:
        NonContractive: the drift A has an eigenvalue with real part above
            -1e-12, or the residual target cannot be met.
    """
    a, c = drift_and_drive(model)
    abscissa = float(np.max(np.linalg.eigvals(a).real))
    if abscissa >= -1e-12:
        raise NonContractive(
            f"drift spectral abscissa {abscissa:.3e} is not below -1e-12; "
            "the model does not relax to a unique steady state"
        )
    d = 2 * model.mode_count
    if not model.hermitian_jumps:
        gamma = scipy.linalg.solve_continuous_lyapunov(a, -c)
        gamma = 0.5 * (gamma - gamma.T)
        for _ in range(3):
            res = covariance_eom(model, gamma)
            if np.linalg.norm(res) <= RESIDUAL_TOL:
                break
            corr = scipy.linalg.solve_continuous_lyapunov(a, -res)
            gamma = gamma + 0.5 * (corr - corr.T)
    else:
        eye = scipy.sparse.identity(d, format="csr")
        op = scipy.sparse.kron(scipy.sparse.csr_matrix(a), eye) + scipy.sparse.kron(
            eye, scipy.sparse.csr_matrix(a)
        )
        for mat, rate in model.hermitian_jumps:
            sm = scipy.sparse.csr_matrix(mat)
            sm2 = scipy.sparse.csr_matrix(mat @ mat)
            op = op + 2.0 * rate * (
                scipy.sparse.kron(sm2, eye)
                + scipy.sparse.kron(eye, sm2)
                + 2.0 * scipy.sparse.kron(sm, sm)
            )
        sol = scipy.sparse.linalg.spsolve(op.tocsc(), -c.reshape(-1))
        gamma = sol.reshape(d, d)
        gamma = 0.5 * (gamma - gamma.T)
    residual = float(np.linalg.norm(covariance_eom(model, gamma)))
    if residual > RESIDUAL_TOL:
        raise NonContractive(
            f"steady-state residual {residual:.3e} exceeds {RESIDUAL_TOL}"
        )
    return CovarianceState(gamma)


def correlation_decay_fit(
    distances: Sequence[float],
    values: Sequence[float],
    block: int = 4,
    floor: float = 1e-14,
) -> tuple[float, float]:
    """Exponential decay length of a correlation profile, with fit quality.

    The profile magnitude in the long-range phase oscillates through near
    zeros, so the fit runs on the envelope: consecutive distances are grouped
    into blocks of ``block`` and each block contributes its maximum (at the
    distance where it occurs). Envelope points below ``floor`` are numerical
    noise from the steady-state solve and are dropped while at least two
    blocks remain. OLS on log(envelope) against distance gives the decay
    rate; returns (length, r_squared) with length = -1/slope, or inf when
    the envelope does not decay.
    """
    distances = np.asarray(distances, dtype=float)
    values = np.maximum(np.abs(np.asarray(values, dtype=float)), 1e-300)
    if distances.shape != values.shape or distances.size < 2 * block:
        raise ValueError("need matching profiles with at least two blocks")
    env_d, env_v = [], []
    for start in range(0, distances.size, block):
        chunk = slice(start, start + block)
        k = int(np.argmax(values[chunk]))
        env_d.append(distances[chunk][k])
        env_v.append(values[chunk][k])
    env_d, env_v = np.asarray(env_d), np.asarray(env_v)
    keep = env_v >= floor
    if np.sum(keep) >= 2:
        env_d, env_v = env_d[keep], env_v[keep]
    logs = np.log(env_v)
    slope, intercept = np.polyfit(env_d, logs, 1)
    fitted = slope * env_d + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    length = -1.0 / slope if slope < 0 else math.inf
    return length, r_squared


def observables(state: CovarianceState, metadata: dict | None = None) -> FermionObservableReport:
    """Densities and occupation covariances from the covariance matrix.

    density_x = 1/2 + Gamma_{2x,2x+1}/2. Off-diagonal covariances come from
    the Gaussian pair contraction
    cov(n_x, n_y) = -(Gamma_{2x,2y} Gamma_{2x+1,2y+1}
                      - Gamma_{2x,2y+1} Gamma_{2x+1,2y}) / 4,
    and the diagonal is the exact single-mode variance d_x (1 - d_x).
    """
    gamma = state.gamma
    even, odd = gamma[0::2, :], gamma[1::2, :]
    gee, geo = even[:, 0::2], even[:, 1::2]
    goe, goo = odd[:, 0::2], odd[:, 1::2]
    density = 0.5 + 0.5 * np.diagonal(geo)
    cov = -0.25 * (gee * goo - geo * goe)
    np.fill_diagonal(cov, density * (1.0 - density))
    meta = {"mode_count": state.mode_count}
    if metadata:
        meta.update(metadata)
    return FermionObservableReport(density=density, covariance=cov, metadata=meta)
