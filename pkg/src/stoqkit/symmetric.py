"""Symmetric subspaces and the separately symmetric extension operator.

The compressed path works in occupation-number coordinates: for a block
of R copies of a d-dimensional register, the symmetric subspace has one
coordinate per occupation vector (n_1, ..., n_d) with sum R, ordered
lexicographically.  Removing the tested copy acts through per-outcome
maps a(x): Sym^R -> Sym^(R-1) with a(x)[mu - e_x, mu] = sqrt(mu_x / R),
which is all the structure the extension and rounding paths need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .product_value import AscentResult, ProductWitness, omega_plus_alternating
from .tensor import RealOperator, RegisterLayout, lambda_max

DENSE_DIM_CAP = 4096


@lru_cache(maxsize=None)
def occupation_vectors(local_dim: int, copies: int) -> tuple[tuple[int, ...], ...]:
    """All occupation vectors (n_1..n_d) with sum = copies, lexicographic."""

    def gen(d: int, total: int):
        if d == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in gen(d - 1, total - first):
                yield (first,) + rest

    return tuple(gen(local_dim, copies))


def symmetric_dim(local_dim: int, copies: int) -> int:
    return math.comb(local_dim + copies - 1, copies)


@dataclass(frozen=True)
class SymmetricBasis:
    """Occupation-number basis of Sym^R(A) with its isometry into A^(x R)."""

    local_dim: int
    copies: int

    @property
    def occupations(self) -> tuple[tuple[int, ...], ...]:
        return occupation_vectors(self.local_dim, self.copies)

    @property
    def dim(self) -> int:
        return symmetric_dim(self.local_dim, self.copies)

    def isometry(self) -> np.ndarray:
        """Columns are the normalized symmetric basis vectors in full coordinates."""
        d, r = self.local_dim, self.copies
        occs = self.occupations
        index = {occ: i for i, occ in enumerate(occs)}
        n = d**r
        iso = np.zeros((n, len(occs)))
        digits = np.stack(np.unravel_index(np.arange(n), (d,) * r), axis=1)
        counts = np.zeros((n, d), dtype=int)
        for x in range(d):
            counts[:, x] = (digits == x).sum(axis=1)
        for flat in range(n):
            occ = tuple(int(c) for c in counts[flat])
            mult = math.factorial(r)
            for c in occ:
                mult //= math.factorial(c)
            iso[flat, index[occ]] = 1.0 / math.sqrt(mult)
        return iso


@lru_cache(maxsize=None)
def annihilation_stack(local_dim: int, copies: int) -> np.ndarray:
    """Stack of maps a(x): Sym^copies -> Sym^(copies-1), shape (d, N', N)."""
    if copies < 1:
        raise ValueError("need at least one copy")
    occs = occupation_vectors(local_dim, copies)
    occs_down = occupation_vectors(local_dim, copies - 1)
    down_index = {occ: i for i, occ in enumerate(occs_down)}
    stack = np.zeros((local_dim, len(occs_down), len(occs)))
    for col, mu in enumerate(occs):
        for x in range(local_dim):
            if mu[x] == 0:
                continue
            sigma = tuple(c - 1 if i == x else c for i, c in enumerate(mu))
            stack[x, down_index[sigma], col] = math.sqrt(mu[x] / copies)
    return stack


@dataclass(frozen=True)
class ExtensionLayout:
    """Base registers with per-block copy counts; the last register is never extended."""

    base: RegisterLayout
    copies: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "copies", tuple(int(r) for r in self.copies))
        if self.base.num_registers < 2:
            raise ValueError("need at least two base registers")
        if len(self.copies) != self.base.num_registers - 1:
            raise ValueError("one copy count per extended register")
        if any(r < 1 for r in self.copies):
            raise ValueError("copy counts must be positive")

    @classmethod
    def uniform(cls, base: RegisterLayout, copies: int) -> "ExtensionLayout":
        return cls(base, (copies,) * (base.num_registers - 1))

    @property
    def num_blocks(self) -> int:
        return len(self.copies)

    @property
    def extended_layout(self) -> RegisterLayout:
        dims: list[int] = []
        for d, r in zip(self.base.dims, self.copies):
            dims.extend([d] * r)
        dims.append(self.base.dims[-1])
        return RegisterLayout(tuple(dims))

    @property
    def tested_positions(self) -> tuple[int, ...]:
        starts = []
        pos = 0
        for r in self.copies:
            starts.append(pos)
            pos += r
        starts.append(pos)
        return tuple(starts)

    @property
    def compressed_shape(self) -> tuple[int, ...]:
        return tuple(
            symmetric_dim(d, r) for d, r in zip(self.base.dims, self.copies)
        ) + (self.base.dims[-1],)

    @property
    def compressed_dim(self) -> int:
        return math.prod(self.compressed_shape)

    def compressed_layout(self) -> RegisterLayout:
        return RegisterLayout(self.compressed_shape)

    def isometry(self) -> np.ndarray:
        """Full-space isometry (product of per-block isometries, identity on the last register)."""
        iso = np.ones((1, 1))
        for d, r in zip(self.base.dims, self.copies):
            iso = np.kron(iso, SymmetricBasis(d, r).isometry())
        return np.kron(iso, np.eye(self.base.dims[-1]))


def sym_projector(d: int, copies: int, cap: int = DENSE_DIM_CAP) -> RealOperator:
    """Orthogonal projector onto Sym^copies(A), averaged over all copy permutations."""
    n = d**copies
    if n > cap:
        raise ValueError(f"projector dimension {n} above the cap of {cap}")
    dims = (d,) * copies
    counts = np.zeros((n, n))
    digits = np.unravel_index(np.arange(n), dims)
    for tau in permutations(range(copies)):
        new_digits = [None] * copies
        for j, slot in enumerate(tau):
            new_digits[slot] = digits[j]
        counts[np.ravel_multi_index(tuple(new_digits), dims), np.arange(n)] += 1.0
    return RealOperator(RegisterLayout(dims), counts / math.factorial(copies))


def _embedded_test(m_op: RealOperator, ext: ExtensionLayout) -> RealOperator:
    from .tensor import embed_on_tested

    return embed_on_tested(m_op, ext.extended_layout, ext.tested_positions)


def extension_operator(
    m_op: RealOperator, copies: int, cap: int = DENSE_DIM_CAP
) -> RealOperator:
    """Full-space compression of the test to the separately symmetric subspace."""
    ext = ExtensionLayout.uniform(m_op.layout, copies)
    full = ext.extended_layout
    if full.total_dim > cap:
        raise ValueError(f"extended dimension {full.total_dim} above the cap of {cap}")
    proj = np.ones((1, 1))
    for d in m_op.layout.dims[:-1]:
        proj = np.kron(proj, sym_projector(d, copies, cap).entries)
    proj = np.kron(proj, np.eye(m_op.layout.dims[-1]))
    embedded = _embedded_test(m_op, ext).entries
    return RealOperator(full, proj @ embedded @ proj)


def extension_operator_compressed(m_op: RealOperator, copies: int) -> RealOperator:
    """The same operator in occupation-number coordinates (same nonzero spectrum)."""
    ext = ExtensionLayout.uniform(m_op.layout, copies)
    dims = m_op.layout.dims
    m = len(dims)
    t = m_op.entries.reshape(dims + dims)
    # contract each extended register pair (a_i, b_i) against a(a_i)^T a(b_i)
    for i in range(m - 1):
        stack = annihilation_stack(dims[i], copies)
        pair = np.einsum("asn,bsm->abnm", stack, stack)
        # contracted row/col axes are removed, (n_i, m_i) appended at the end
        t = np.tensordot(t, pair, axes=([0, m - i], [0, 1]))
    # axes now: (a_last, b_last, n_1, m_1, n_2, m_2, ...)
    row_axes = [2 + 2 * i for i in range(m - 1)] + [0]
    col_axes = [3 + 2 * i for i in range(m - 1)] + [1]
    t = t.transpose(row_axes + col_axes)
    dim = ext.compressed_dim
    return RealOperator(ext.compressed_layout(), t.reshape(dim, dim))


def lift_product_witness(
    w: ProductWitness, copies: int, compressed: bool = False
) -> np.ndarray:
    """Unit vector x_1^(x R) ... x_(m-1)^(x R) (x) x_m on the extended space."""
    factors = w.factors
    if compressed:
        out = np.ones(1)
        for f in factors[:-1]:
            occs = occupation_vectors(f.size, copies)
            coords = np.array(
                [
                    math.sqrt(_multinomial(copies, occ))
                    * math.prod(float(f[j]) ** occ[j] for j in range(f.size))
                    for occ in occs
                ]
            )
            out = np.kron(out, coords)
        return np.kron(out, factors[-1])
    out = np.ones(1)
    for f in factors[:-1]:
        block = np.ones(1)
        for _ in range(copies):
            block = np.kron(block, f)
        out = np.kron(out, block)
    return np.kron(out, factors[-1])


def _multinomial(total: int, occ: tuple[int, ...]) -> int:
    mult = math.factorial(total)
    for c in occ:
        mult //= math.factorial(c)
    return mult


def top_eigenvalue(m_op: RealOperator, copies: int) -> float:
    """Largest eigenvalue of the compressed extension operator."""
    return lambda_max(extension_operator_compressed(m_op, copies))


@dataclass(frozen=True)
class SandwichReport:
    omega_lower: float
    lambda_r: float
    lambda_r_minus_1: float | None
    lift_holds: bool
    monotone_holds: bool
    observed_gap: float
    implied_epsilon: float | None
    witness: ProductWitness


def check_sandwich(
    m_op: RealOperator,
    copies: int,
    restarts: int = 50,
    seed: int = 0,
    grid_points: int | None = None,
    slack: float = 1e-9,
) -> SandwichReport:
    """Compare the best product lower bound against the extension eigenvalue.

    The quantitative upper bound at the analysis copy count is far out
    of reach at desk scale, so the report instead states the accuracy
    epsilon for which this copy count would be enough: epsilon such that
    copies = 1 + 128 L (m-1)^2 / epsilon^3.
    """
    ascent: AscentResult = omega_plus_alternating(m_op, restarts=restarts, seed=seed)
    omega_lower = ascent.value
    witness = ascent.witness
    if grid_points is not None:
        from .product_value import omega_plus_grid

        omega_lower = max(omega_lower, omega_plus_grid(m_op, grid_points))
    lam = top_eigenvalue(m_op, copies)
    lam_prev = top_eigenvalue(m_op, copies - 1) if copies >= 2 else None
    lift_holds = omega_lower <= lam + slack
    monotone_holds = True if lam_prev is None else lam <= lam_prev + slack
    dims = m_op.layout.dims
    m = len(dims)
    ell = max(1.0, sum(math.log(d) for d in dims))
    implied = None
    if copies >= 2:
        implied = (128.0 * ell * (m - 1) ** 2 / (copies - 1)) ** (1.0 / 3.0)
    return SandwichReport(
        omega_lower=omega_lower,
        lambda_r=lam,
        lambda_r_minus_1=lam_prev,
        lift_holds=bool(lift_holds),
        monotone_holds=bool(monotone_holds),
        observed_gap=float(lam - omega_lower),
        implied_epsilon=implied,
        witness=witness,
    )
