"""Nonnegative product values of entrywise-nonnegative symmetric tests.

Two routes to a lower bound on the best product witness: exhaustive
orthant grids (a slow, certified oracle for tiny instances) and
block-coordinate ascent with a Perron eigenvector step (fast, still a
valid lower bound because every iterate is feasible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import RealOperator, is_entrywise_nonneg, require_symmetric

FACTOR_NORM_TOL = 1e-10
GRID_MAX_LOCAL_DIM = 3
GRID_MAX_FACTORS = 3
_CHUNK = 512


@dataclass(frozen=True)
class ProductWitness:
    """One entrywise-nonnegative unit vector per register."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(np.asarray(f, dtype=float).reshape(-1) for f in self.factors)
        for f in factors:
            if np.any(f < -1e-12):
                raise ValueError("witness factor has a negative entry")
            if abs(np.linalg.norm(f) - 1.0) > FACTOR_NORM_TOL:
                raise ValueError("witness factor is not a unit vector")
        object.__setattr__(self, "factors", factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def vector(self) -> np.ndarray:
        out = np.ones(1)
        for f in self.factors:
            out = np.kron(out, f)
        return out


def product_value(m_op: RealOperator, w: ProductWitness) -> float:
    """Quadratic form of the tensor-product witness."""
    if w.dims != m_op.layout.dims:
        raise ValueError("witness layout does not match operator layout")
    v = w.vector()
    return float(v @ m_op.entries @ v)


def _orthant_grid(d: int, points: int) -> np.ndarray:
    """Unit vectors covering the nonnegative orthant of R^d, d <= 3."""
    if d == 1:
        return np.ones((1, 1))
    angles = np.linspace(0.0, math.pi / 2.0, points + 1)
    if d == 2:
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if d == 3:
        t1, t2 = np.meshgrid(angles, angles, indexing="ij")
        t1, t2 = t1.reshape(-1), t2.reshape(-1)
        return np.stack(
            [np.cos(t1), np.sin(t1) * np.cos(t2), np.sin(t1) * np.sin(t2)], axis=1
        )
    raise ValueError("grid oracle only covers local dimension <= 3")


def omega_plus_grid(m_op: RealOperator, grid_points_per_angle: int) -> float:
    """Best product value over an orthant grid; a certified lower bound.

    Frozen to the oracle regime (every local dimension <= 3, at most 3
    registers).  For contractions the result is within 4*m*pi/points of
    the true optimum by a Lipschitz argument.
    """
    dims = m_op.layout.dims
    m = len(dims)
    if m > GRID_MAX_FACTORS or any(d > GRID_MAX_LOCAL_DIM for d in dims):
        raise ValueError("instance outside the grid-oracle regime")
    grids = [_orthant_grid(d, grid_points_per_angle) for d in dims]
    t = m_op.entries.reshape(dims + dims)
    best = -math.inf
    if m == 1:
        vals = np.einsum("ai,aj,ij->a", grids[0], grids[0], t)
        return float(vals.max())
    if m == 2:
        x2 = grids[1]
        for start in range(0, grids[0].shape[0], _CHUNK):
            x1 = grids[0][start : start + _CHUNK]
            vals = np.einsum("ai,ak,bj,bl,ijkl->ab", x1, x1, x2, x2, t, optimize=True)
            best = max(best, float(vals.max()))
        return best
    x3 = grids[2]
    for start1 in range(0, grids[0].shape[0], _CHUNK):
        x1 = grids[0][start1 : start1 + _CHUNK]
        for start2 in range(0, grids[1].shape[0], _CHUNK):
            x2 = grids[1][start2 : start2 + _CHUNK]
            vals = np.einsum(
                "ai,al,bj,bm,ck,cn,ijklmn->abc", x1, x1, x2, x2, x3, x3, t, optimize=True
            )
            best = max(best, float(vals.max()))
    return best


@dataclass(frozen=True)
class AscentResult:
    value: float
    witness: ProductWitness
    histories: tuple[tuple[float, ...], ...]


def _induced_matrix(t: np.ndarray, factors: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Contract all factors except i on both sides, leaving a d_i x d_i matrix."""
    m = len(factors)
    letters = "abcdefghijkl"
    row = [letters[j] for j in range(m)]
    col = [letters[m + j] for j in range(m)]
    operands = [t]
    subs = ["".join(row + col)]
    for j in range(m):
        if j == i:
            continue
        operands += [factors[j], factors[j]]
        subs += [row[j], col[j]]
    expr = ",".join(subs) + "->" + row[i] + col[i]
    return np.einsum(expr, *operands, optimize=True)


def _perron_step(b: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Entrywise-nonnegative top eigenvector of a nonnegative symmetric matrix.

    Ties are broken by projecting the previous factor onto the top
    eigenspace; the absolute value stays inside that eigenspace because
    its nonnegative basis vectors have disjoint supports.
    """
    evals, evecs = np.linalg.eigh(b)
    lam = evals[-1]
    top = evecs[:, evals >= lam - 1e-10 * max(1.0, abs(lam))]
    proj = top @ (top.T @ previous)
    v = np.abs(proj)
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        v = np.abs(top[:, 0])
        nv = np.linalg.norm(v)
    return v / nv


def omega_plus_alternating(
    m_op: RealOperator,
    restarts: int = 50,
    seed: int = 0,
    stagnation_tol: float = 1e-10,
    max_sweeps: int = 10_000,
) -> AscentResult:
    """Block-coordinate ascent over nonnegative unit factors.

    Holding all factors but one fixed, the optimal remaining factor is
    the Perron eigenvector of the induced matrix, so iteration values
    never decrease and every iterate is a feasible witness.
    """
    if not is_entrywise_nonneg(m_op, tol=1e-12):
        raise ValueError("operator must be entrywise nonnegative")
    require_symmetric(m_op.entries)
    dims = m_op.layout.dims
    m = len(dims)
    t = m_op.entries.reshape(dims + dims)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best_value = -math.inf
    best_factors: list[np.ndarray] | None = None
    histories: list[tuple[float, ...]] = []
    for child in children:
        rng = np.random.default_rng(child)
        factors = []
        for d in dims:
            f = np.abs(rng.standard_normal(d))
            factors.append(f / np.linalg.norm(f))
        witness = ProductWitness(tuple(factors))
        value = product_value(m_op, witness)
        history = [value]
        for _ in range(max_sweeps):
            sweep_start = value
            for i in range(m):
                b = _induced_matrix(t, factors, i)
                factors[i] = _perron_step(b, factors[i])
                value = float(factors[i] @ b @ factors[i])
                history.append(value)
            if value - sweep_start < stagnation_tol:
                break
        histories.append(tuple(history))
        if value > best_value:
            best_value = value
            best_factors = [f.copy() for f in factors]
    assert best_factors is not None
    witness = ProductWitness(tuple(best_factors))
    return AscentResult(product_value(m_op, witness), witness, tuple(histories))
