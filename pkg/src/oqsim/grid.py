"""Two-dimensional qudit-lattice encoding of layered circuits.

Each qubit row carries its value across an N x R grid of six-level qudits,
with column x read as time step x of the circuit. A site holds either a
qubit value (plain 0/1 before the round's gate, barred 0/1 after it), a
spent marker left behind once the value moved on, or a fresh marker for
sites the computation has not reached. Gate jumps bar a site while the
neighbouring markers certify that it is that site's turn; swap jumps move
a finished column one step right, bottom row first; penalty jumps push
configurations outside the admissible set back toward it. The resulting
pure-jump Lindbladian funnels every initial state into a uniform mixture
over the move history of the encoded circuit, and a two-outcome observable
on the last column reads off the circuit output.

Levels are indexed 0..5 in the order (0, 1, 0 barred, 1 barred, spent,
fresh). Sites are addressed as (column x, row y), both 1-based, with row 1
at the top; operators reaching outside the lattice drop the off-lattice
factors.
"""

from __future__ import annotations

import dataclasses
import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

from .lindblad import (
    DENSE_SUPEROP_LIMIT,
    DensityMatrix,
    EvolutionFailure,
    _superop_matrix,
    trace_norm,
)
from .encoder import RoundCircuit

LEVEL_COUNT = 6
LEVEL_NAMES = ("0", "1", "0b", "1b", "x", "o")
UNBARRED = (0, 1)
BARRED = (2, 3)
SPENT = 4
FRESH = 5

#: Largest site count for which full-lattice sparse matrices are assembled.
#: Each jump matrix carries identity factors on untouched sites, so its
#: nonzero count grows as 6^sites; beyond this the arrays no longer fit.
MAX_ASSEMBLY_SITES = 7

#: Largest site count for which the admissible sector is enumerated.
MAX_ENUMERATION_SITES = 9

CLOSURE_TOL = 1e-12


class EncodingClosureError(RuntimeError):
    """The gate jumps leaked out of the admissible subspace."""


def _bar(bit: int) -> int:
    return bit + 2


def _level_projector(levels: Sequence[int]) -> np.ndarray:
    p = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
    for lv in levels:
        p[lv, lv] = 1.0
    return p


_PROJ_UNBARRED = _level_projector(UNBARRED)
_PROJ_BARRED = _level_projector(BARRED)
_PROJ_SPENT = _level_projector((SPENT,))
_PROJ_FRESH = _level_projector((FRESH,))


# ---------------------------------------------------------------------------
# Admissibility rules


def validate_configuration(labels) -> tuple[str, ...]:
    """Check a grid labelling against the admissibility rules.

    ``labels`` is an (N, R) array of level indices with row 1 first.
    Returns one message per violated constraint, empty when admissible.
    Rules 1-4 constrain horizontal neighbours (left, right), rules 5-8
    vertical neighbours (top over bottom), rule 9 the boundary columns:

        1. fresh left of a value          2. value left of spent
        3. fresh/spent in either order    4. two values side by side
        5. anything but barred above a barred value
        6. plain value above fresh or spent
        7. fresh over spent or spent over fresh
        8. barred over fresh, spent over plain value
        9. fresh in the first column, spent in the last
    """
    grid = np.asarray(labels)
    if grid.ndim != 2:
        raise ValueError(f"labels must be 2D, got shape {grid.shape}")
    if grid.size == 0:
        raise ValueError("labels must be non-empty")
    if np.any((grid < 0) | (grid >= LEVEL_COUNT)):
        raise ValueError("labels must take values 0..5")
    rows, cols = grid.shape
    out = []

    def name(lv):
        return LEVEL_NAMES[lv]

    for y in range(1, rows + 1):
        for x in range(1, cols):
            left = int(grid[y - 1, x - 1])
            right = int(grid[y - 1, x])
            rule = _horizontal_rule(left, right)
            if rule:
                out.append(
                    f"rule {rule} at (x={x},y={y})-(x={x + 1},y={y}): "
                    f"{name(left)}|{name(right)}"
                )
    for x in range(1, cols + 1):
        for y in range(1, rows):
            top = int(grid[y - 1, x - 1])
            bottom = int(grid[y, x - 1])
            rule = _vertical_rule(top, bottom)
            if rule:
                out.append(
                    f"rule {rule} at (x={x},y={y})/(x={x},y={y + 1}): "
                    f"{name(top)}/{name(bottom)}"
                )
    for y in range(1, rows + 1):
        if grid[y - 1, 0] == FRESH:
            out.append(f"rule 9 at (x=1,y={y}): o")
        if grid[y - 1, cols - 1] == SPENT:
            out.append(f"rule 9 at (x={cols},y={y}): x")
    return tuple(out)


def _horizontal_rule(left: int, right: int) -> int:
    values = UNBARRED + BARRED
    if left == FRESH and right in values:
        return 1
    if left in values and right == SPENT:
        return 2
    if (left, right) in ((FRESH, SPENT), (SPENT, FRESH)):
        return 3
    if left in values and right in values:
        return 4
    return 0


def _vertical_rule(top: int, bottom: int) -> int:
    if bottom in BARRED and top not in BARRED:
        return 5
    if top in UNBARRED and bottom in (FRESH, SPENT):
        return 6
    if (top, bottom) in ((FRESH, SPENT), (SPENT, FRESH)):
        return 7
    if (top in BARRED and bottom == FRESH) or (top == SPENT and bottom in UNBARRED):
        return 8
    return 0


def initial_configuration(rows: int, cols: int) -> np.ndarray:
    """First column in |0>, every other site fresh."""
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and one column")
    grid = np.full((rows, cols), FRESH, dtype=int)
    grid[:, 0] = 0
    return grid


def configuration_index(labels, cols: int | None = None) -> int:
    """Flatten a grid labelling to a basis-state index (row-major, base 6)."""
    grid = np.asarray(labels, dtype=int)
    idx = 0
    for lv in grid.ravel():
        idx = idx * LEVEL_COUNT + int(lv)
    return idx


# ---------------------------------------------------------------------------
# Jump operators


@dataclasses.dataclass(frozen=True)
class GridJump:
    """Product-form jump operator on the qudit grid.

    ``factors`` is a tuple of (sites, block) pairs: sites is a tuple of
    (column, row) addresses and block a dense matrix on their joint levels
    (6^len per side, sites ordered as given). Factors touch disjoint sites;
    untouched qudits are acted on by the identity. With ``add_adjoint``
    the assembled operator is the product plus its adjoint.
    """

    kind: str
    factors: tuple[tuple[tuple[tuple[int, int], ...], np.ndarray], ...]
    add_adjoint: bool = False

    def __init__(self, kind: str, factors, add_adjoint: bool = False):
        seen: set[tuple[int, int]] = set()
        norm = []
        for sites, block in factors:
            sts = tuple((int(x), int(y)) for x, y in sites)
            for site in sts:
                if site in seen:
                    raise ValueError(f"site {site} appears in two factors")
                seen.add(site)
            mat = np.array(block, dtype=complex)
            want = LEVEL_COUNT ** len(sts)
            if mat.shape != (want, want):
                raise ValueError(
                    f"block on {sts} must be {want}x{want}, got {mat.shape}"
                )
            mat.setflags(write=False)
            norm.append((sts, mat))
        object.__setattr__(self, "kind", str(kind))
        object.__setattr__(self, "factors", tuple(norm))
        object.__setattr__(self, "add_adjoint", bool(add_adjoint))

    @property
    def sites(self) -> tuple[tuple[int, int], ...]:
        return tuple(site for sites, _ in self.factors for site in sites)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "add_adjoint": self.add_adjoint,
            "factors": [
                {
                    "sites": [[x, y] for x, y in sites],
                    "entries": [
                        [float(z.real), float(z.imag)] for z in block.ravel()
                    ],
                }
                for sites, block in self.factors
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GridJump":
        factors = []
        for fac in data["factors"]:
            sites = tuple((int(x), int(y)) for x, y in fac["sites"])
            dim = LEVEL_COUNT ** len(sites)
            flat = np.array([complex(re, im) for re, im in fac["entries"]])
            if flat.size != dim * dim:
                raise ValueError(f"expected {dim * dim} entries, got {flat.size}")
            factors.append((sites, flat.reshape(dim, dim)))
        return cls(data["kind"], factors, bool(data["add_adjoint"]))


def jump_matrix(jump: GridJump, rows: int, cols: int) -> sparse.csr_matrix:
    """Assemble the full-lattice sparse matrix of a jump operator."""
    total = rows * cols
    if total > MAX_ASSEMBLY_SITES:
        raise ValueError(
            f"refusing to assemble matrices on {total} sites "
            f"(limit {MAX_ASSEMBLY_SITES})"
        )
    dim = LEVEL_COUNT**total
    weights = LEVEL_COUNT ** np.arange(total - 1, -1, -1, dtype=np.int64)

    pieces = []
    touched = set()
    for sites, block in jump.factors:
        pos = []
        for x, y in sites:
            if not (1 <= x <= cols and 1 <= y <= rows):
                raise ValueError(f"site (x={x},y={y}) outside the {rows}x{cols} grid")
            pos.append((y - 1) * cols + (x - 1))
        touched.update(pos)
        r_idx, c_idx = np.nonzero(block)
        vals = np.asarray(block[r_idx, c_idx])
        g_rows = np.zeros(r_idx.size, dtype=np.int64)
        g_cols = np.zeros(c_idx.size, dtype=np.int64)
        for i, p in enumerate(pos):
            shift = LEVEL_COUNT ** (len(pos) - 1 - i)
            g_rows += ((r_idx // shift) % LEVEL_COUNT) * weights[p]
            g_cols += ((c_idx // shift) % LEVEL_COUNT) * weights[p]
        pieces.append((g_rows, g_cols, vals))
    for p in sorted(set(range(total)) - touched):
        diag = np.arange(LEVEL_COUNT, dtype=np.int64) * weights[p]
        pieces.append((diag, diag, np.ones(LEVEL_COUNT, dtype=complex)))

    rows_acc = np.zeros(1, dtype=np.int64)
    cols_acc = np.zeros(1, dtype=np.int64)
    vals_acc = np.ones(1, dtype=complex)
    for g_rows, g_cols, vals in pieces:
        rows_acc = (rows_acc[:, None] + g_rows[None, :]).ravel()
        cols_acc = (cols_acc[:, None] + g_cols[None, :]).ravel()
        vals_acc = (vals_acc[:, None] * vals[None, :]).ravel()
    mat = sparse.coo_matrix(
        (vals_acc, (rows_acc, cols_acc)), shape=(dim, dim)
    ).tocsr()
    if jump.add_adjoint:
        mat = (mat + mat.conj().T).tocsr()
    mat.eliminate_zeros()
    return mat


def _single_gate_jump(gate: np.ndarray, x: int, rows: int, cols: int) -> GridJump:
    core = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            core[_bar(a), b] = gate[a, b]
    factors = [(((x, 1),), core)]
    if x > 1:
        factors.append((((x - 1, 1),), _PROJ_SPENT))
    if x < cols:
        factors.append((((x + 1, 1),), _PROJ_FRESH))
    if rows > 1:
        factors.append((((x, 2),), _PROJ_UNBARRED))
    return GridJump("computation", factors, add_adjoint=True)


def _double_gate_jump(
    gate: np.ndarray, x: int, y: int, rows: int, cols: int
) -> GridJump:
    # Input: row y barred (previous gate of the round), row y+1 plain.
    core = np.zeros((36, 36), dtype=complex)
    for a in (0, 1):
        for a2 in (0, 1):
            for b in (0, 1):
                for b2 in (0, 1):
                    core[_bar(a) * 6 + _bar(a2), _bar(b) * 6 + b2] = gate[
                        2 * a + a2, 2 * b + b2
                    ]
    factors = [(((x, y), (x, y + 1)), core)]
    if x > 1:
        factors.append((((x - 1, y + 1),), _PROJ_SPENT))
    if x < cols:
        factors.append((((x + 1, y + 1),), _PROJ_FRESH))
    if y + 2 <= rows:
        factors.append((((x, y + 2),), _PROJ_UNBARRED))
    return GridJump("computation", factors, add_adjoint=True)


def _swap_jump(x: int, y: int, rows: int, cols: int) -> GridJump:
    # Moves the barred value at (x, y) one column right, leaving a spent
    # marker; fires bottom-to-top, certified by the neighbouring rows.
    core = np.zeros((36, 36), dtype=complex)
    for a in (0, 1):
        core[SPENT * 6 + a, _bar(a) * 6 + FRESH] = 1.0
    factors = [(((x, y), (x + 1, y)), core)]
    if x > 1:
        factors.append((((x - 1, y),), _PROJ_SPENT))
    if x + 2 <= cols:
        factors.append((((x + 2, y),), _PROJ_FRESH))
    if y > 1:
        factors.append((((x, y - 1),), _PROJ_BARRED))
        factors.append((((x + 1, y - 1),), _PROJ_FRESH))
    if y < rows:
        factors.append((((x, y + 1),), _PROJ_SPENT))
        factors.append((((x + 1, y + 1),), _PROJ_UNBARRED))
    return GridJump("swap", factors, add_adjoint=True)


def _pair_block(left_or_top: int, other: int, target: int, pref: float) -> np.ndarray:
    block = np.zeros((36, 36))
    block[left_or_top * 6 + target, left_or_top * 6 + other] = pref
    return block


def _horizontal_penalties(x: int, y: int) -> list[GridJump]:
    """Penalty jumps for the edge (x, y)-(x+1, y); the right qudit is reset."""
    sites = ((x, y), (x + 1, y))
    values = UNBARRED + BARRED
    jumps = []

    def emit(left, right, targets):
        pref = 1.0 / math.sqrt(len(targets))
        for z in targets:
            jumps.append(
                GridJump("penalty", ((sites, _pair_block(left, right, z, pref)),))
            )

    for right in values:
        emit(FRESH, right, (FRESH,))
    for left in values:
        emit(left, SPENT, (FRESH,))
    emit(FRESH, SPENT, (FRESH,))
    emit(SPENT, FRESH, (SPENT, 0, 1, 2, 3))
    for left in values:
        for right in values:
            emit(left, right, (FRESH,))
    return jumps


def _vertical_penalties(x: int, y: int) -> list[GridJump]:
    """Penalty jumps for the pair (x, y) over (x, y+1); the bottom is reset."""
    sites = ((x, y), (x, y + 1))
    jumps = []

    def emit(top, bottom, targets):
        pref = 1.0 / math.sqrt(len(targets))
        for z in targets:
            jumps.append(
                GridJump("penalty", ((sites, _pair_block(top, bottom, z, pref)),))
            )

    for bottom in BARRED:
        emit(FRESH, bottom, (FRESH, 0, 1))
        emit(SPENT, bottom, (SPENT,))
        for top in UNBARRED:
            emit(top, bottom, (0, 1))
    for top in UNBARRED:
        emit(top, FRESH, (0, 1))
        emit(top, SPENT, (0, 1))
    emit(FRESH, SPENT, (FRESH, 0, 1))
    emit(SPENT, FRESH, (SPENT,))
    for top in BARRED:
        emit(top, FRESH, (SPENT, 0, 1, 2, 3))
    for bottom in UNBARRED:
        emit(SPENT, bottom, (SPENT,))
    return jumps


def _column_penalties(x: int, y: int, source: int) -> list[GridJump]:
    """Four half-weight jumps resetting a lone marker to a value state."""
    jumps = []
    for z in UNBARRED + BARRED:
        block = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
        block[z, source] = 0.5
        jumps.append(GridJump("penalty", ((((x, y),), block),)))
    return jumps


# ---------------------------------------------------------------------------
# The encoding


def encode_grid(circuit: RoundCircuit, output_row: int | None = None) -> "GridEncoding":
    """Grid-lattice Lindbladian encoding of a layered circuit.

    The grid has one row per qubit and one column per round. ``output_row``
    selects the row whose last-column qudit carries the readout observable;
    it defaults to the bottom row.
    """
    rows = circuit.qubit_count
    cols = circuit.round_count
    if cols < 1:
        raise ValueError("cannot encode a circuit with zero rounds")
    out_row = rows if output_row is None else int(output_row)
    if not 1 <= out_row <= rows:
        raise ValueError(f"output row {out_row} outside 1..{rows}")

    computation = []
    for x, rnd in enumerate(circuit.rounds, start=1):
        computation.append(_single_gate_jump(rnd.single, x, rows, cols))
        for y, gate in enumerate(rnd.doubles, start=1):
            computation.append(_double_gate_jump(gate, x, y, rows, cols))

    swaps = []
    for x in range(1, cols):
        for y in range(rows, 0, -1):
            swaps.append(_swap_jump(x, y, rows, cols))

    reset = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
    reset[0, 1] = 1.0
    inits = [
        GridJump("init", ((((1, alpha),), reset),)) for alpha in range(1, rows + 1)
    ]

    penalties = []
    for y in range(1, rows + 1):
        for x in range(1, cols):
            penalties.extend(_horizontal_penalties(x, y))
    for x in range(1, cols + 1):
        for y in range(1, rows):
            penalties.extend(_vertical_penalties(x, y))
    for y in range(1, rows + 1):
        penalties.extend(_column_penalties(1, y, FRESH))
        penalties.extend(_column_penalties(cols, y, SPENT))

    return GridEncoding(
        circuit,
        rows,
        cols,
        out_row,
        tuple(computation),
        tuple(swaps),
        tuple(inits),
        tuple(penalties),
    )


@dataclasses.dataclass(frozen=True)
class GridFixedPoint:
    """Fixed point reached by evolution, kept in the admissible basis.

    ``basis`` lists the admissible basis-state indices and ``sector_state``
    the density matrix on their span. ``time`` is the evolution time used
    (zero for a state written down directly) and ``residual_rate`` the last
    observed trace-norm change per unit time.
    """

    basis: np.ndarray
    sector_state: np.ndarray
    dim: int
    time: float
    residual_rate: float

    def expectation(self, op: sparse.spmatrix) -> float:
        """Tr(op rho) for an operator on the full lattice space."""
        sub = op.tocsr()[self.basis, :][:, self.basis].toarray()
        return float(np.real(np.trace(sub @ self.sector_state)))

    def dense_state(self) -> DensityMatrix:
        full = np.zeros((self.dim, self.dim), dtype=complex)
        full[np.ix_(self.basis, self.basis)] = self.sector_state
        return DensityMatrix(full)


class GridEncoding:
    """Jump-operator inventory of the grid encoding for one circuit."""

    def __init__(
        self,
        circuit: RoundCircuit,
        rows: int,
        cols: int,
        output_row: int,
        computation_jumps: tuple[GridJump, ...],
        swap_jumps: tuple[GridJump, ...],
        init_jumps: tuple[GridJump, ...],
        penalty_jumps: tuple[GridJump, ...],
    ):
        self.circuit = circuit
        self.rows = rows
        self.cols = cols
        self.output_row = output_row
        self.computation_jumps = computation_jumps
        self.swap_jumps = swap_jumps
        self.init_jumps = init_jumps
        self.penalty_jumps = penalty_jumps

    @property
    def site_count(self) -> int:
        return self.rows * self.cols

    @property
    def dim(self) -> int:
        return LEVEL_COUNT**self.site_count

    @property
    def all_jumps(self) -> tuple[GridJump, ...]:
        return (
            self.computation_jumps
            + self.swap_jumps
            + self.init_jumps
            + self.penalty_jumps
        )

    @property
    def move_count(self) -> int:
        """Length of the move chain: N*R gate moves plus N*(R-1) swaps."""
        return len(self.computation_jumps) + len(self.swap_jumps)

    @cached_property
    def jump_matrices(self) -> tuple[sparse.csr_matrix, ...]:
        return tuple(
            jump_matrix(j, self.rows, self.cols) for j in self.all_jumps
        )

    def observable(self) -> sparse.csr_matrix:
        """Readout observable on the last-column qudit of the output row.

        Projector onto barred 0 minus projector onto barred 1, so the
        expectation matches the sign of a Z measurement on that qubit.
        """
        block = np.zeros((LEVEL_COUNT, LEVEL_COUNT))
        block[_bar(0), _bar(0)] = 1.0
        block[_bar(1), _bar(1)] = -1.0
        probe = GridJump("observable", ((((self.cols, self.output_row),), block),))
        return jump_matrix(probe, self.rows, self.cols)

    def error_operator(self) -> sparse.csr_matrix:
        """Sum of P^dag P over the penalty jumps; diagonal, counts violations."""
        dim = self.dim
        total = sparse.csr_matrix((dim, dim), dtype=complex)
        for jump, mat in zip(self.all_jumps, self.jump_matrices):
            if jump.kind == "penalty":
                total = total + mat.conj().T @ mat
        total.eliminate_zeros()
        return total

    # -- admissible sector -------------------------------------------------

    @cached_property
    def _digit_table(self) -> np.ndarray:
        total = self.site_count
        if total > MAX_ENUMERATION_SITES:
            raise ValueError(
                f"admissible-sector enumeration limited to "
                f"{MAX_ENUMERATION_SITES} sites, got {total}"
            )
        weights = LEVEL_COUNT ** np.arange(total - 1, -1, -1, dtype=np.int64)
        idx = np.arange(self.dim, dtype=np.int64)
        return ((idx[:, None] // weights[None, :]) % LEVEL_COUNT).astype(np.int8)

    def violation_counts(self) -> np.ndarray:
        """Number of violated constraints for every basis configuration."""
        digits = self._digit_table
        rows, cols = self.rows, self.cols
        values = np.array(UNBARRED + BARRED)

        def at(x, y):
            return digits[:, (y - 1) * cols + (x - 1)]

        def isin(arr, levels):
            return np.isin(arr, np.asarray(levels))

        count = np.zeros(self.dim, dtype=np.int64)
        for y in range(1, rows + 1):
            for x in range(1, cols):
                left, right = at(x, y), at(x + 1, y)
                lv, rv = isin(left, values), isin(right, values)
                count += (left == FRESH) & rv
                count += lv & (right == SPENT)
                count += (left == FRESH) & (right == SPENT)
                count += (left == SPENT) & (right == FRESH)
                count += lv & rv
        for x in range(1, cols + 1):
            for y in range(1, rows):
                top, bottom = at(x, y), at(x, y + 1)
                count += isin(bottom, BARRED) & ~isin(top, BARRED)
                count += isin(top, UNBARRED) & isin(bottom, (FRESH, SPENT))
                count += (top == FRESH) & (bottom == SPENT)
                count += (top == SPENT) & (bottom == FRESH)
                count += isin(top, BARRED) & (bottom == FRESH)
                count += (top == SPENT) & isin(bottom, UNBARRED)
        for y in range(1, rows + 1):
            count += at(1, y) == FRESH
            count += at(self.cols, y) == SPENT
        return count

    @cached_property
    def sector_basis(self) -> np.ndarray:
        """Indices of the admissible basis configurations, ascending."""
        return np.flatnonzero(self.violation_counts() == 0)

    def sector_projector(self) -> sparse.csr_matrix:
        dim = self.dim
        basis = self.sector_basis
        return sparse.csr_matrix(
            (np.ones(basis.size), (basis, basis)), shape=(dim, dim)
        )

    def sector_leakage(self) -> float:
        """Largest matrix element the jumps send out of the admissible span.

        Gate, swap and init jumps must map admissible basis states into the
        admissible span; penalty jumps must annihilate them. The return
        value is the largest violating amplitude, zero for an exact
        encoding.
        """
        basis = self.sector_basis
        outside = np.ones(self.dim, dtype=bool)
        outside[basis] = False
        worst = 0.0
        for jump, mat in zip(self.all_jumps, self.jump_matrices):
            cols_in = mat.tocsc()[:, basis]
            if jump.kind == "penalty":
                if cols_in.nnz:
                    worst = max(worst, float(np.max(np.abs(cols_in.data))))
            else:
                sub = cols_in.tocsr()[outside, :]
                if sub.nnz:
                    worst = max(worst, float(np.max(np.abs(sub.data))))
        return worst

    def _require_closure(self):
        leak = self.sector_leakage()
        if leak > CLOSURE_TOL:
            raise EncodingClosureError(
                f"jumps leak {leak:.3e} out of the admissible span"
            )

    @cached_property
    def _sector_superop(self) -> np.ndarray:
        self._require_closure()
        basis = self.sector_basis
        blocks = []
        for jump, mat in zip(self.all_jumps, self.jump_matrices):
            if jump.kind == "penalty":
                continue
            blocks.append(mat.tocsr()[basis, :][:, basis].toarray())
        k = basis.size
        return _superop_matrix(np.zeros((k, k)), blocks, adjoint=False)

    # -- dynamics ----------------------------------------------------------

    def apply(self, rho):
        """Action of the generator on a full-lattice density matrix.

        Accepts a dense array or a scipy sparse matrix and returns the same
        kind. Uses the sparse jump matrices term by term.
        """
        mats = self.jump_matrices
        dense = not sparse.issparse(rho)
        out = None
        for mat in mats:
            term = mat @ rho @ mat.conj().T
            out = term if out is None else out + term
        kdiag = self._jump_weight_diagonal
        if dense:
            out = out - 0.5 * (kdiag[:, None] * rho + rho * kdiag[None, :])
        else:
            kd = sparse.diags(kdiag)
            out = out - 0.5 * (kd @ rho + rho @ kd)
        return out

    @cached_property
    def _jump_weight_diagonal(self) -> np.ndarray:
        total = np.zeros(self.dim)
        for mat in self.jump_matrices:
            prod = (mat.conj().T @ mat).tocsr()
            diag = prod.diagonal().real
            off = prod - sparse.diags(prod.diagonal())
            off.eliminate_zeros()
            if off.nnz and float(np.max(np.abs(off.data))) > 1e-12:
                raise EncodingClosureError("jump weight operator is not diagonal")
            total += diag
        return total

    def _dense_superop(self) -> np.ndarray:
        if self.dim**2 > DENSE_SUPEROP_LIMIT:
            raise EvolutionFailure(
                f"dense full-lattice evolution needs dim^2 <= "
                f"{DENSE_SUPEROP_LIMIT}, got {self.dim**2}"
            )
        blocks = [mat.toarray() for mat in self.jump_matrices]
        return _superop_matrix(np.zeros((self.dim, self.dim)), blocks, adjoint=False)

    def evolve_dense(self, rho0: np.ndarray, times: Sequence[float]) -> list[np.ndarray]:
        """Full-lattice evolution from any start, for small grids only."""
        ts = [float(t) for t in times]
        if any(t < 0 for t in ts) or any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("times must be non-negative and non-decreasing")
        sup = self._dense_superop()
        d = self.dim
        vec = np.asarray(rho0, dtype=complex).reshape(-1)
        out = []
        t_prev = 0.0
        props: dict[float, np.ndarray] = {}
        for t in ts:
            dt = t - t_prev
            if dt > 0:
                if dt not in props:
                    props[dt] = scipy.linalg.expm(sup * dt)
                vec = props[dt] @ vec
            out.append(vec.reshape(d, d).copy())
            t_prev = t
        return out

    def fixed_point(
        self,
        rate_tol: float = 1e-9,
        t_cap: float | None = None,
    ) -> GridFixedPoint:
        """Long-time evolution from the initial encoding state.

        The state stays in the admissible span (this is verified against
        the sparse jump matrices when the sector machinery is built), so
        the evolution runs on that span. Windows double until the
        trace-norm change per unit time drops below ``rate_tol``; the time
        cap defaults to 50 N^3 R^3.

        Raises EvolutionFailure if the cap is hit first.
        """
        if t_cap is None:
            t_cap = 50.0 * self.rows**3 * self.cols**3
        sup = self._sector_superop
        basis = self.sector_basis
        k = basis.size
        start = configuration_index(initial_configuration(self.rows, self.cols))
        where = np.searchsorted(basis, start)
        if where >= k or basis[where] != start:
            raise EncodingClosureError("initial configuration is not admissible")
        rho = np.zeros((k, k), dtype=complex)
        rho[where, where] = 1.0

        t_done = 0.0
        window = 1.0
        rate = math.inf
        props: dict[float, np.ndarray] = {}
        while rate > rate_tol:
            if t_done >= t_cap:
                raise EvolutionFailure(
                    f"fixed point not reached: rate {rate:.3e} after t={t_done:g} "
                    f"(cap {t_cap:g})"
                )
            window = min(window, t_cap - t_done)
            if window not in props:
                props[window] = scipy.linalg.expm(sup * window)
            nxt = (props[window] @ rho.reshape(-1)).reshape(k, k)
            rate = trace_norm(nxt - rho) / window
            rho = nxt
            t_done += window
            if window < 64.0:
                window = min(2.0 * window, 64.0)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        return GridFixedPoint(basis, rho, self.dim, t_done, float(rate))

    # -- history -----------------------------------------------------------

    def history_shapes(self) -> list[np.ndarray]:
        """Marker pattern of the grid after each move of the encoded chain.

        Entries are 'u' (plain value), 'b' (barred value), 'x' (spent) and
        'o' (fresh); the list has N*R + N*(R-1) + 1 entries, one per move
        plus the start.
        """
        rows, cols = self.rows, self.cols
        shape = np.full((rows, cols), "o", dtype="<U1")
        shape[:, 0] = "u"
        out = [shape.copy()]
        for x in range(1, cols + 1):
            shape[0, x - 1] = "b"
            out.append(shape.copy())
            for y in range(2, rows + 1):
                shape[y - 1, x - 1] = "b"
                out.append(shape.copy())
            if x < cols:
                for y in range(rows, 0, -1):
                    shape[y - 1, x - 1] = "x"
                    shape[y - 1, x] = "u"
                    out.append(shape.copy())
        return out

    def history_state_indices(self, move: int) -> tuple[np.ndarray, np.ndarray]:
        """Basis indices and amplitudes of the encoded state after a move.

        The qubit register after ``move`` moves is the circuit state after
        the corresponding number of gates; its bits sit on the live site of
        each row (barred or plain as the shape dictates).
        """
        shapes = self.history_shapes()
        if not 0 <= move < len(shapes):
            raise ValueError(f"move {move} outside 0..{len(shapes) - 1}")
        shape = shapes[move]
        gates = sum(
            1
            for s in range(1, move + 1)
            if self._move_kind(s) == "gate"
        )
        from .encoder import circuit_statevector

        amps = circuit_statevector(self.circuit, upto=gates)
        rows, cols = self.rows, self.cols
        live = []
        for y in range(1, rows + 1):
            xs = [x for x in range(1, cols + 1) if shape[y - 1, x - 1] in "ub"]
            if len(xs) != 1:
                raise RuntimeError(f"row {y} has {len(xs)} live sites")
            live.append((xs[0], shape[y - 1, xs[0] - 1]))
        base = np.zeros((rows, cols), dtype=int)
        for y in range(1, rows + 1):
            for x in range(1, cols + 1):
                glyph = shape[y - 1, x - 1]
                if glyph == "x":
                    base[y - 1, x - 1] = SPENT
                elif glyph == "o":
                    base[y - 1, x - 1] = FRESH
        indices = np.zeros(amps.size, dtype=np.int64)
        for z in range(amps.size):
            grid = base.copy()
            for y in range(1, rows + 1):
                bit = (z >> (rows - y)) & 1
                x, glyph = live[y - 1]
                grid[y - 1, x - 1] = _bar(bit) if glyph == "b" else bit
            indices[z] = configuration_index(grid)
        return indices, amps

    def _move_kind(self, move: int) -> str:
        # Each round except the last contributes N gate moves then N swap
        # moves; the last round has gates only.
        block = 2 * self.rows
        x_block, rem = divmod(move - 1, block)
        if x_block >= self.cols - 1:
            return "gate"
        return "gate" if rem < self.rows else "swap"

    def fixed_point_reference(self) -> GridFixedPoint:
        """Uniform mixture over the move history, written down directly."""
        basis = self.sector_basis
        k = basis.size
        rho = np.zeros((k, k), dtype=complex)
        moves = self.move_count
        for move in range(moves + 1):
            indices, amps = self.history_state_indices(move)
            pos = np.searchsorted(basis, indices)
            if np.any(pos >= k) or np.any(basis[np.minimum(pos, k - 1)] != indices):
                raise EncodingClosureError(
                    f"history state after move {move} leaves the admissible span"
                )
            vec = np.zeros(k, dtype=complex)
            vec[pos] = amps
            rho += np.outer(vec, vec.conj())
        rho /= moves + 1
        return GridFixedPoint(basis, rho, self.dim, 0.0, 0.0)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "output_row": self.output_row,
            "level_order": list(LEVEL_NAMES),
            "counts": {
                "computation": len(self.computation_jumps),
                "swap": len(self.swap_jumps),
                "init": len(self.init_jumps),
                "penalty": len(self.penalty_jumps),
            },
            "observable_site": [self.cols, self.output_row],
            "jumps": [j.to_json_dict() for j in self.all_jumps],
        }
