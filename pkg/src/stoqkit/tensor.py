"""Real linear algebra on tensor-product registers.

Everything downstream works with real matrices indexed by mixed-radix
basis labels.  A basis label is an ordinary tuple of digits, first digit
most significant, matching C-order raveling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-9
DENSE_EIG_CUTOVER = 512


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered local dimensions of a tensor-product register."""

    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError("local dimensions must be positive integers")

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def num_registers(self) -> int:
        return len(self.dims)

    def ravel(self, digits: Sequence[int]) -> int:
        """Flat index of a mixed-radix basis label."""
        if len(digits) != len(self.dims):
            raise ValueError("digit count does not match register count")
        for g, d in zip(digits, self.dims):
            if not 0 <= g < d:
                raise ValueError(f"digit {g} out of range for dimension {d}")
        return int(np.ravel_multi_index(tuple(digits), self.dims))

    def unravel(self, index: int) -> tuple[int, ...]:
        """Mixed-radix basis label of a flat index."""
        return tuple(int(x) for x in np.unravel_index(index, self.dims))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.dims + other.dims)


@dataclass(frozen=True)
class RealOperator:
    """Dense real matrix together with the register layout it acts on."""

    layout: RegisterLayout
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        n = self.layout.total_dim
        if entries.shape != (n, n):
            raise ValueError(
                f"entries shape {entries.shape} inconsistent with layout dimension {n}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    @classmethod
    def identity(cls, layout: RegisterLayout) -> "RealOperator":
        return cls(layout, np.eye(layout.total_dim))


def tensor(a: RealOperator, b: RealOperator) -> RealOperator:
    """Kronecker product with concatenated layout."""
    return RealOperator(a.layout.concat(b.layout), np.kron(a.entries, b.entries))


def embed_on_tested(
    m_op: RealOperator,
    full_layout: RegisterLayout,
    tested_positions: Sequence[int],
) -> RealOperator:
    """Act with ``m_op`` on the named registers of ``full_layout``.

    The operator's k-th tensor factor lands on register
    ``tested_positions[k]``; all other registers get the identity.
    """
    positions = [int(p) for p in tested_positions]
    dims = full_layout.dims
    m = len(dims)
    if len(set(positions)) != len(positions):
        raise ValueError("tested positions must be distinct")
    if any(not 0 <= p < m for p in positions):
        raise ValueError("tested position out of range")
    if tuple(dims[p] for p in positions) != m_op.layout.dims:
        raise ValueError("dimension mismatch between operator and tested positions")

    rest = [p for p in range(m) if p not in positions]
    rest_dim = math.prod(dims[p] for p in rest) if rest else 1
    big = np.kron(m_op.entries, np.eye(rest_dim))
    # big acts on registers in the order positions + rest; permute into layout order
    order = positions + rest
    inv = np.argsort(order)
    t = big.reshape([dims[p] for p in order] * 2)
    t = t.transpose(list(inv) + [m + i for i in inv])
    n = full_layout.total_dim
    return RealOperator(full_layout, np.ascontiguousarray(t.reshape(n, n)))


def copy_permutation(tau: Sequence[int], local_dim: int) -> RealOperator:
    """Permutation operator moving tensor factor j to slot tau[j] on A^(x R)."""
    tau = tuple(int(t) for t in tau)
    r = len(tau)
    if sorted(tau) != list(range(r)):
        raise ValueError("tau is not a permutation")
    dims = (local_dim,) * r
    n = local_dim**r
    digits = np.unravel_index(np.arange(n), dims)
    new_digits = [None] * r
    for j, slot in enumerate(tau):
        new_digits[slot] = digits[j]
    new_index = np.ravel_multi_index(tuple(new_digits), dims)
    u = np.zeros((n, n))
    u[new_index, np.arange(n)] = 1.0
    return RealOperator(RegisterLayout(dims), u)


def is_entrywise_nonneg(op: RealOperator, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    return bool(np.all(op.entries >= -tol))


def require_symmetric(entries: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    gap = float(np.max(np.abs(entries - entries.T))) if entries.size else 0.0
    if gap > tol:
        raise ValueError(f"matrix is not symmetric within {tol} (max asymmetry {gap})")


def psd_interval_check(op: RealOperator, tol: float = PSD_TOL) -> bool:
    """True iff all eigenvalues of the (symmetric) operator lie in [-tol, 1+tol]."""
    require_symmetric(op.entries)
    evals = np.linalg.eigvalsh(op.entries)
    return bool(evals[0] >= -tol and evals[-1] <= 1.0 + tol)


def lambda_max(
    op: RealOperator,
    method: str = "auto",
    max_iter: int | None = None,
    restarts: int = 3,
) -> float:
    """Largest eigenvalue of a symmetric operator.

    Dense solver below DENSE_EIG_CUTOVER, Lanczos iteration above.  The
    iterative path restarts from a fresh random vector instead of
    deflating when ARPACK fails to converge, and raises after the
    configured number of restarts.
    """
    require_symmetric(op.entries)
    n = op.dim
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if n <= DENSE_EIG_CUTOVER else "iterative"
    if method == "dense" or n < 3:
        return float(np.linalg.eigvalsh(op.entries)[-1])

    rng = np.random.default_rng(0x5EED)
    maxiter = max_iter if max_iter is not None else max(1000, 20 * n)
    last_err: Exception | None = None
    for _ in range(restarts):
        v0 = rng.standard_normal(n)
        try:
            vals = eigsh(
                op.entries, k=1, which="LA", v0=v0, maxiter=maxiter, tol=1e-11,
                return_eigenvectors=False,
            )
            return float(vals[0])
        except ArpackNoConvergence as err:  # retry with a new start vector
            last_err = err
    raise RuntimeError(
        f"extremal eigenvalue iteration failed to converge after {restarts} restarts"
    ) from last_err
