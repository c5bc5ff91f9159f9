"""Classical distribution utilities: Hellinger, KL, entropy, tensorization.

All logarithms are natural.  Probabilities below SUPPORT_TOL are treated
as exact zeros when deciding absolute continuity, since measuring
floating-point state vectors produces denormal dust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import RegisterLayout

SUPPORT_TOL = 1e-15
NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class JointDistribution:
    """Distribution over a product alphabet, stored as an array shaped like the alphabet."""

    layout: RegisterLayout
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != self.layout.dims:
            probs = probs.reshape(self.layout.dims)
        if np.any(probs < -1e-12):
            raise ValueError("negative probability")
        probs = np.clip(probs, 0.0, None)
        total = float(probs.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def num_coordinates(self) -> int:
        return self.layout.num_registers

    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    @classmethod
    def from_flat(cls, layout: RegisterLayout, flat: Sequence[float]) -> "JointDistribution":
        return cls(layout, np.asarray(flat, dtype=float).reshape(layout.dims))


def _check_same_alphabet(p: JointDistribution, q: JointDistribution) -> None:
    if p.layout.dims != q.layout.dims:
        raise ValueError("alphabet mismatch")


def marginal(p: JointDistribution, coords: Sequence[int]) -> JointDistribution:
    """Exact marginal over the named coordinates (kept in ascending order)."""
    coords = sorted(int(c) for c in coords)
    if not coords:
        raise ValueError("coords must be nonempty")
    if len(set(coords)) != len(coords) or coords[-1] >= p.num_coordinates:
        raise ValueError("invalid coordinate set")
    drop = tuple(i for i in range(p.num_coordinates) if i not in coords)
    out = p.probs.sum(axis=drop) if drop else p.probs
    layout = RegisterLayout(tuple(p.layout.dims[c] for c in coords))
    return JointDistribution(layout, out)


def product_of_marginals(p: JointDistribution) -> JointDistribution:
    """Tensor product of all one-coordinate marginals."""
    out = np.ones(())
    for i in range(p.num_coordinates):
        out = np.multiply.outer(out, marginal(p, [i]).probs)
    return JointDistribution(p.layout, out.reshape(p.layout.dims))


def _product_with_complement(p: JointDistribution, coord: int) -> JointDistribution:
    """p_i (x) p_rest, reassembled in the original coordinate order."""
    m = p.num_coordinates
    rest = [j for j in range(m) if j != coord]
    pi = marginal(p, [coord]).probs
    prest = marginal(p, rest).probs
    out = np.multiply.outer(pi, prest)  # axes: coord, then rest ascending
    order = [coord] + rest
    out = out.transpose(np.argsort(order))
    return JointDistribution(p.layout, out)


def hellinger(p: JointDistribution, q: JointDistribution) -> float:
    """Hellinger distance, normalized so that d_H^2 = 1 - sum sqrt(p q)."""
    _check_same_alphabet(p, q)
    affinity = float(np.sum(np.sqrt(p.flat() * q.flat())))
    return math.sqrt(max(0.0, 1.0 - affinity))


def kl(p: JointDistribution, q: JointDistribution) -> float:
    """Relative entropy sum p log(p/q) in nats; +inf off the support of q."""
    _check_same_alphabet(p, q)
    pf, qf = p.flat(), q.flat()
    support = pf > SUPPORT_TOL
    if np.any(support & (qf <= SUPPORT_TOL)):
        return math.inf
    ps, qs = pf[support], qf[support]
    return float(np.sum(ps * np.log(ps / qs)))


def entropy(p: JointDistribution) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    pf = p.flat()
    pos = pf[pf > SUPPORT_TOL]
    return float(-np.sum(pos * np.log(pos))) if pos.size else 0.0


def mutual_information(
    p: JointDistribution, coords_a: Sequence[int], coords_b: Sequence[int]
) -> float:
    """KL between the joint and the product of the marginals on the two coordinate sets."""
    ca, cb = sorted(coords_a), sorted(coords_b)
    if set(ca) & set(cb):
        raise ValueError("coordinate sets overlap")
    if sorted(ca + cb) != list(range(p.num_coordinates)):
        raise ValueError("coordinate sets must partition the coordinates")
    pa = marginal(p, ca).probs
    pb = marginal(p, cb).probs
    out = np.multiply.outer(pa, pb)
    order = ca + cb
    out = out.transpose(np.argsort(order))
    return kl(p, JointDistribution(p.layout, out))


def coordinate_independence_gap(p: JointDistribution, coord: int) -> float:
    """Hellinger distance between p and p_coord (x) p_rest."""
    return hellinger(p, _product_with_complement(p, coord))


@dataclass(frozen=True)
class HellingerKLReport:
    kl: float
    hellinger: float
    holds: bool


def check_hellinger_kl(
    p: JointDistribution, q: JointDistribution, slack: float = 1e-12
) -> HellingerKLReport:
    """Check the lower bound KL >= 2 d_H^2."""
    d = hellinger(p, q)
    div = kl(p, q)
    return HellingerKLReport(div, d, bool(div >= 2.0 * d * d - slack))


@dataclass(frozen=True)
class TensorizationReport:
    per_coordinate: tuple[float, ...]
    global_distance: float
    holds: bool


def check_tensorization(
    p: JointDistribution, delta: float, slack: float = 1e-12
) -> TensorizationReport:
    """Check that coordinatewise near-independence bounds the global distance.

    The hypothesis covers every coordinate except the last; when all
    those per-coordinate distances are at most delta, the distance to
    the full product of marginals must be at most (m-1) delta.
    """
    m = p.num_coordinates
    if m < 2:
        raise ValueError("need at least two coordinates")
    per = tuple(coordinate_independence_gap(p, i) for i in range(m - 1))
    global_d = hellinger(p, product_of_marginals(p))
    hypothesis = all(g <= delta for g in per)
    holds = (not hypothesis) or (global_d <= (m - 1) * delta + slack)
    return TensorizationReport(per, global_d, bool(holds))
