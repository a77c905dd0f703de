"""Lattice geometry, Lieb-Robinson bounds, and runtime budget calculators.

Geometry lives on finite d-dimensional grids with the Manhattan metric
(per-axis wraparound when periodic). A family of interaction supports S_a
carries the interaction range a = max diam(S_a) and the degree
Z = max_a |{a' : S_a and S_a' intersect}| (self-inclusive).

The Lieb-Robinson bound for a superoperator K with K(I) = 0 and an
observable O with ||O|| <= 1 reads

    ||K e^{L^dag t}(O)|| <= eta_{S_O} ||K|| exp(4 e Z t - d(S_K, S_O)/a),

with eta_S = boundary_degree(S)/Z, and the two-superoperator variant carries
an extra factor e and averages the two distances. The lattice-summation
functions xi^(m,k) and their closed-form majorant nu^(m) are evaluated
exactly as finite sums; the budget calculators turn the runtime theorems
into planning numbers with every suppressed constant set to 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

ASYMPTOTIC_NOTE = "asymptotic, constants suppressed"

BUDGET_KINDS = (
    "local-dynamics",
    "rapid-mixing",
    "noisy-local-dynamics",
    "noisy-rapid-mixing",
)


def _site(s) -> tuple[int, ...]:
    if isinstance(s, (int, np.integer)):
        return (int(s),)
    return tuple(int(c) for c in s)


@dataclass(frozen=True)
class Lattice:
    """Finite grid with Manhattan metric and optional per-axis wraparound."""

    shape: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __init__(self, shape: Iterable[int], periodic=False):
        shape = tuple(int(n) for n in shape)
        if not shape or any(n < 1 for n in shape):
            raise ValueError(f"lattice extents must be positive, got {shape}")
        if isinstance(periodic, bool):
            flags = (periodic,) * len(shape)
        else:
            flags = tuple(bool(p) for p in periodic)
            if len(flags) != len(shape):
                raise ValueError("one periodic flag per axis required")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "periodic", flags)

    @property
    def dimension(self) -> int:
        return len(self.shape)

    def _check(self, site) -> tuple[int, ...]:
        site = _site(site)
        if len(site) != self.dimension:
            raise ValueError(f"site {site} has wrong dimension for shape {self.shape}")
        for c, n in zip(site, self.shape):
            if not 0 <= c < n:
                raise ValueError(f"site {site} outside lattice of shape {self.shape}")
        return site

    def distance(self, x, y) -> int:
        """Manhattan distance, minimized over wraparound on periodic axes."""
        x, y = self._check(x), self._check(y)
        total = 0
        for xi, yi, n, wrap in zip(x, y, self.shape, self.periodic):
            step = abs(xi - yi)
            if wrap:
                step = min(step, n - step)
            total += step
        return total

    def set_distance(self, a, b) -> int:
        a = [self._check(s) for s in a]
        b = [self._check(s) for s in b]
        if not a or not b:
            raise ValueError("set distance needs nonempty sets")
        return min(self.distance(x, y) for x in a for y in b)

    def diameter(self, s) -> int:
        s = [self._check(x) for x in s]
        if not s:
            raise ValueError("diameter of an empty set")
        return max(self.distance(x, y) for x in s for y in s)

    def sites(self) -> list[tuple[int, ...]]:
        out = [()]
        for n in self.shape:
            out = [row + (c,) for row in out for c in range(n)]
        return out


class SupportFamily:
    """Interaction supports with cached range a and degree Z.

    The degree is the self-inclusive overlap count
    Z = max_a |{a' : S_a intersects S_a'}|, computed by brute force. An
    explicit ``interaction_range`` may only enlarge the computed max diameter.
    """

    def __init__(
        self,
        lattice: Lattice,
        supports: Sequence[Iterable],
        interaction_range: float | None = None,
    ):
        self.lattice = lattice
        sets = []
        for sup in supports:
            fs = frozenset(lattice._check(s) for s in sup)
            if not fs:
                raise ValueError("empty interaction support")
            sets.append(fs)
        if not sets:
            raise ValueError("a support family needs at least one support")
        self.supports: tuple[frozenset, ...] = tuple(sets)
        max_diam = max(lattice.diameter(s) for s in self.supports)
        if interaction_range is None:
            self.interaction_range = float(max_diam)
        elif interaction_range < max_diam:
            raise ValueError(
                f"declared interaction range {interaction_range} below the "
                f"largest support diameter {max_diam}"
            )
        else:
            self.interaction_range = float(interaction_range)
        self.degree = max(
            sum(1 for other in self.supports if s & other) for s in self.supports
        )

    def boundary_degree(self, region) -> int:
        """Number of supports intersecting the region, |{a : S_a meets S}|."""
        region = frozenset(self.lattice._check(s) for s in region)
        return sum(1 for s in self.supports if s & region)

    def eta(self, region) -> float:
        bd = self.boundary_degree(region)
        if bd == 0:
            raise ValueError(
                "region does not meet any interaction support; the "
                "Lieb-Robinson prefactor is undefined there"
            )
        return bd / self.degree


@dataclass(frozen=True)
class RapidMixingSpec:
    """Exponential-convergence parameters of a rapidly mixing observable."""

    gamma: float
    kappa: float
    k_value: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("decay rate gamma must be positive")
        if self.kappa <= 0:
            raise ValueError("exponent kappa must be positive")
        if self.k_value < 0:
            raise ValueError("prefactor k_value must be nonnegative")


# ---------------------------------------------------------------------------
# Lieb-Robinson bounds


def lr_bound(family: SupportFamily, support_K, support_O, norm_K: float, t: float) -> float:
    """One-superoperator bound eta_{S_O} ||K|| exp(4eZt - d(S_K, S_O)/a)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if norm_K < 0:
        raise ValueError("superoperator norm must be nonnegative")
    dist = family.lattice.set_distance(support_K, support_O)
    grow = 4.0 * math.e * family.degree * t
    a = family.interaction_range
    if a == 0:
        return family.eta(support_O) * norm_K * math.exp(grow) if dist == 0 else 0.0
    return family.eta(support_O) * norm_K * math.exp(grow - dist / a)


def lr_bound_two(
    family: SupportFamily,
    support_X,
    support_Y,
    support_O,
    norms: tuple[float, float],
    t: float,
) -> float:
    """Two-superoperator bound with factor e and distance-averaged decay.

    Requires diam(X), diam(Y) <= a; both superoperators must annihilate the
    identity for the bound to apply (not checkable here, documented).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    norm_x, norm_y = norms
    if norm_x < 0 or norm_y < 0:
        raise ValueError("superoperator norms must be nonnegative")
    a = family.interaction_range
    for name, sup in (("X", support_X), ("Y", support_Y)):
        diam = family.lattice.diameter(sup)
        if diam > a:
            raise ValueError(
                f"support {name} has diameter {diam} above the interaction range {a}"
            )
    d_x = family.lattice.set_distance(support_X, support_O)
    d_y = family.lattice.set_distance(support_Y, support_O)
    grow = 4.0 * math.e * family.degree * t
    pref = math.e * family.eta(support_O) * norm_x * norm_y
    if a == 0:
        return pref * math.exp(grow) if d_x == d_y == 0 else 0.0
    return pref * math.exp(grow - (d_x + d_y) / (2.0 * a))


# ---------------------------------------------------------------------------
# Lattice summation functions


@lru_cache(maxsize=None)
def _eulerian_row(p: int) -> tuple[int, ...]:
    row = (1,)
    for n in range(2, p + 1):
        prev = row
        row = tuple(
            (k + 1) * (prev[k] if k < len(prev) else 0)
            + (n - k) * (prev[k - 1] if k >= 1 else 0)
            for k in range(n)
        )
    return row


@lru_cache(maxsize=None)
def geometric_power_sum(lam: float, p: int) -> float:
    """X_p(lambda) = sum_{n>=0} n^p e^{-n/lambda}, exact closed form."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if p < 0:
        raise ValueError("power p must be a nonnegative integer")
    if lam == 0:
        return 1.0 if p == 0 else 0.0
    q = math.exp(-1.0 / lam)
    if p == 0:
        return 1.0 / (1.0 - q)
    num = sum(c * q ** (k + 1) for k, c in enumerate(_eulerian_row(p)))
    return num / (1.0 - q) ** (p + 1)


@lru_cache(maxsize=None)
def partial_power_sum(z: float, m: int, d: int) -> float:
    """Y_m(z) = sum_{n=0}^{ceil(z)} n^m (n + d - 1)^(d-1), with 0^0 = 1."""
    if z < 0:
        raise ValueError("z must be nonnegative")
    top = math.ceil(z)
    return float(sum(n**m * (n + d - 1) ** (d - 1) for n in range(top + 1)))


@dataclass(frozen=True)
class BoundIngredients:
    """Parameter bundle for the summation functions with cached pieces."""

    lam: float
    x: float
    T: float
    m: int
    k: int
    dimension: int = 1

    def __post_init__(self):
        if self.lam < 0 or self.x < 0 or self.T < 0:
            raise ValueError("lambda, x and T must be nonnegative")
        if self.m not in (0, 1):
            raise ValueError("m must be 0 or 1")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")

    def x_p(self, p: int) -> float:
        return geometric_power_sum(self.lam, p)

    def y_m(self, z: float) -> float:
        return partial_power_sum(z, self.m, self.dimension)

    def nu(self, z_tilde: float, s_size: int) -> float:
        return nu_bound(self.lam, self.T, self.m, z_tilde, s_size, self.dimension)


def lattice_sum_xi(
    family: SupportFamily,
    target,
    lam: float,
    x: float,
    T: float,
    m: int = 0,
    k: int = 1,
) -> float:
    """xi^(m,k)_{lam,x}(T) = sum over k-tuples of D^m min(x e^{T - D/lam}, 1).

    D is the sum of the k support-to-target distances. The k-fold sum is
    evaluated exactly by convolving the integer distance histogram, which is
    equivalent to enumerating all |family|^k index tuples.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if m < 0:
        raise ValueError("m must be a nonnegative integer")
    if lam < 0 or x < 0:
        raise ValueError("lambda and x must be nonnegative")
    dists = np.array(
        [family.lattice.set_distance(s, target) for s in family.supports]
    )
    counts = np.bincount(dists).astype(float)
    total = counts
    for _ in range(k - 1):
        total = np.convolve(total, counts)
    dvals = np.arange(len(total), dtype=float)
    if lam == 0:
        core = np.where(dvals == 0, min(x * math.exp(T), 1.0), 0.0)
    else:
        core = np.minimum(x * np.exp(T - dvals / lam), 1.0)
    return float(np.sum(total * dvals**m * core))


def nu_bound(lam: float, T: float, m: int, z_tilde: float, s_size: int, d: int) -> float:
    """Closed-form majorant nu^(m)(lam, T) of the single lattice sum.

    Piecewise constant in T with jumps only at integer values of lam*T;
    evaluates the X_p geometric sums and the Y_m partial polynomial sum with
    the 0^0 = 1 convention throughout.
    """
    if lam < 0 or T < 0:
        raise ValueError("lambda and T must be nonnegative")
    if d < 1:
        raise ValueError("dimension d must be at least 1")
    if m < 0:
        raise ValueError("m must be a nonnegative integer")
    fl = math.floor(lam * T)
    ce = math.ceil(lam * T)
    pref = 2.0**d * z_tilde * s_size / math.factorial(d - 1)
    tail = 0.0
    for sigma in (0, 1):
        for sigma_p in (0, 1):
            tail += (
                fl ** ((1 - sigma) * m)
                * (d - 1 + fl) ** ((1 - sigma_p) * (d - 1))
                * geometric_power_sum(lam, sigma * m + sigma_p * (d - 1))
            )
    return pref * (partial_power_sum(ce, m, d) + 2.0 ** (d - 2) * tail)


def xi_upper_bound(
    lam: float, x: float, T: float, m: int, k: int, z_tilde: float, s_size: int, d: int
) -> float:
    """max(x,1)^k k^m (nu^(0))^{k-m} (nu^(1))^m, the lemma's majorant of xi."""
    if m not in (0, 1):
        raise ValueError("the xi majorant is stated for m in {0, 1}")
    nu0 = nu_bound(lam, T, 0, z_tilde, s_size, d)
    nu1 = nu_bound(lam, T, 1, z_tilde, s_size, d)
    return max(x, 1.0) ** k * k**m * nu0 ** (k - m) * nu1**m


# ---------------------------------------------------------------------------
# Budget calculators (constant-1 convention)


def prop1_budget(m_jumps: int, h_norm: float, t: float, eps: float) -> tuple[float, float]:
    """General-Lindbladian budget: omega and simulator time for precision eps.

    omega = sqrt(eps / (M + 4 M ||H|| t + 4 M^2 t)) and t_sim = t/omega^2,
    with every Theta-constant set to 1. If eps exceeds the budget denominator
    the returned omega is capped at 1 (with a warning) and t_sim = t.
    """
    if m_jumps <= 0 or t <= 0 or eps <= 0:
        raise ValueError("M, t and eps must be positive")
    if h_norm < 0:
        raise ValueError("H norm must be nonnegative")
    denom = m_jumps + 4.0 * m_jumps * h_norm * t + 4.0 * m_jumps**2 * t
    omega = math.sqrt(eps / denom)
    if omega >= 1.0:
        warnings.warn(
            f"requested precision {eps} exceeds the error budget {denom}; "
            "omega capped at 1",
            stacklevel=2,
        )
        omega = 1.0
    return omega, t / omega**2


@dataclass(frozen=True)
class BudgetResult:
    """Planning numbers from a runtime theorem, constants set to 1."""

    omega: float
    t_sim: float
    precision: float
    kind: str
    metadata: str = ASYMPTOTIC_NOTE

    def __iter__(self):
        yield self.omega
        yield self.t_sim
        yield self.precision


def _require(kind: str, **params) -> None:
    missing = [name for name, value in params.items() if value is None]
    if missing:
        raise ValueError(
            f"budget kind '{kind}' needs parameters: {', '.join(missing)}"
        )


def prop_budget_local(
    kind: str,
    d: int,
    *,
    t: float | None = None,
    gamma: float | None = None,
    kappa: float | None = None,
    eps: float | None = None,
    delta: float | None = None,
    variant: str = "summary",
) -> BudgetResult:
    """Runtime/precision scalings for geometrically local problems.

    Kinds: "local-dynamics" (observable at time t, choose eps),
    "rapid-mixing" (rapidly mixing observable, choose eps),
    "noisy-local-dynamics" and "noisy-rapid-mixing" (noise rate delta fixes
    the reachable precision). All constants are 1 and the results carry the
    "asymptotic, constants suppressed" flag.

    "local-dynamics" has two published exponents; ``variant`` selects
    "summary" (omega ~ t^-(d+1/2), t_sim ~ t^(2d+2)/eps) or "analysis"
    (omega ~ t^-(2d+1), t_sim ~ t^(4d+3)/eps).

    For the rapid-mixing kinds, omitting t substitutes the convergence time
    of the observable (gamma^-(kappa+1) + gamma^-1 log(1/eps) noiseless,
    gamma^-(kappa+1) (log(1/delta) + log(1/gamma)) noisy).
    """
    if kind not in BUDGET_KINDS:
        raise ValueError(f"unknown budget kind '{kind}'; choose from {BUDGET_KINDS}")
    if d < 1:
        raise ValueError("lattice dimension d must be at least 1")
    if variant not in ("summary", "analysis"):
        raise ValueError("variant must be 'summary' or 'analysis'")

    if kind == "local-dynamics":
        _require(kind, t=t, eps=eps)
        exponent = (d + 0.5) if variant == "summary" else (2 * d + 1)
        omega = t ** (-exponent) * math.sqrt(eps)
        return BudgetResult(omega, t / omega**2, eps, kind)

    if kind == "rapid-mixing":
        _require(kind, gamma=gamma, kappa=kappa, eps=eps)
        omega = gamma ** ((d + 0.5) * (kappa + 1)) * math.sqrt(eps)
        if t is None:
            t = gamma ** (-(kappa + 1)) + max(0.0, math.log(1.0 / eps)) / gamma
        return BudgetResult(omega, t / omega**2, eps, kind)

    if kind == "noisy-local-dynamics":
        _require(kind, t=t, delta=delta)
        omega = delta**0.25
        return BudgetResult(omega, t / omega**2, math.sqrt(delta) * t ** (2 * d + 1), kind)

    _require(kind, gamma=gamma, kappa=kappa, delta=delta)
    omega = delta**0.25
    precision = math.sqrt(delta) * gamma ** (-(kappa + 1) * (2 * d + 1))
    if t is None:
        t = gamma ** (-(kappa + 1)) * (
            max(0.0, math.log(1.0 / delta)) + max(0.0, math.log(1.0 / gamma))
        )
    return BudgetResult(omega, t / omega**2, precision, kind)
