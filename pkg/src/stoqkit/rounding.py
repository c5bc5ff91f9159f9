"""Constructive rounding of separately bosonic states to product witnesses.

States live in occupation-number coordinates, where the bosonic support
condition holds by construction.  Measuring the tested copy of block i
is the per-outcome map a(x): Sym^r -> Sym^(r-1); conditioning keeps the
normalized post-measurement state with one fewer copy.  The adaptive
loop conditions on the block with the largest Hellinger violation,
keeps the outcome with the best potential, and finishes with the
square-root-marginal rounding step, which is sound because the test
matrix has no negative entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as cartesian

import numpy as np

from .distances import (
    JointDistribution,
    coordinate_independence_gap,
    entropy,
    hellinger,
    product_of_marginals,
    marginal,
)
from .product_value import ProductWitness, product_value
from .symmetric import ExtensionLayout, annihilation_stack
from .tensor import (
    RealOperator,
    RegisterLayout,
    is_entrywise_nonneg,
    require_symmetric,
)

SUPPORT_TOL = 1e-9
NORM_TOL = 1e-10
ZERO_WEIGHT_TOL = 1e-12
DENSITY_DIM_CAP = 512


@dataclass(frozen=True)
class BosonicState:
    """State on a separately symmetric subspace, in compressed coordinates."""

    layout: ExtensionLayout
    data: np.ndarray
    is_density: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        dim = self.layout.compressed_dim
        if self.is_density:
            if data.shape != (dim, dim):
                raise ValueError("density shape does not match the layout")
            if abs(np.trace(data) - 1.0) > NORM_TOL:
                raise ValueError("density trace is not 1")
        else:
            data = data.reshape(-1)
            if data.size != dim:
                raise ValueError("vector length does not match the layout")
            if abs(np.linalg.norm(data) - 1.0) > NORM_TOL:
                raise ValueError("state vector is not normalized")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_compressed_vector(cls, layout: ExtensionLayout, vec) -> "BosonicState":
        return cls(layout, np.asarray(vec, dtype=float), is_density=False)

    @classmethod
    def from_compressed_density(cls, layout: ExtensionLayout, rho) -> "BosonicState":
        return cls(layout, np.asarray(rho, dtype=float), is_density=True)

    @classmethod
    def from_full_vector(cls, layout: ExtensionLayout, vec) -> "BosonicState":
        """Project a full-coordinate vector, rejecting support outside the subspace."""
        vec = np.asarray(vec, dtype=float).reshape(-1)
        iso = layout.isometry()
        if vec.size != iso.shape[0]:
            raise ValueError("vector length does not match the extended space")
        coeff = iso.T @ vec
        residual = float(np.linalg.norm(vec - iso @ coeff))
        if residual > SUPPORT_TOL:
            raise ValueError(
                f"support violation: {residual} outside the separately symmetric subspace"
            )
        return cls(layout, coeff / np.linalg.norm(coeff), is_density=False)

    @classmethod
    def maximally_mixed(cls, layout: ExtensionLayout) -> "BosonicState":
        dim = layout.compressed_dim
        return cls(layout, np.eye(dim) / dim, is_density=True)

    def to_full(self) -> np.ndarray:
        iso = self.layout.isometry()
        if self.is_density:
            return iso @ self.data @ iso.T
        return iso @ self.data


def _tested_outcomes(layout: ExtensionLayout):
    return cartesian(*[range(d) for d in layout.base.dims])


def _project_pure(state_tensor: np.ndarray, layout: ExtensionLayout, outcome) -> np.ndarray:
    """Apply the tested-copy maps for one outcome; returns the unnormalized remainder."""
    v = state_tensor
    for i, a in enumerate(outcome[:-1]):
        stack = annihilation_stack(layout.base.dims[i], layout.copies[i])
        v = np.moveaxis(np.tensordot(stack[a], v, axes=(1, i)), 0, i)
    return v[..., outcome[-1]]


def _block_operator(layout: ExtensionLayout, block: int, mat: np.ndarray) -> np.ndarray:
    """kron(I, ..., mat at the block position, ..., I) on compressed coordinates."""
    shape = layout.compressed_shape
    out = np.ones((1, 1))
    for i, n in enumerate(shape):
        out = np.kron(out, mat if i == block else np.eye(n))
    return out


def _tested_outcome_matrix(layout: ExtensionLayout, outcome) -> np.ndarray:
    """Matrix sending compressed coordinates to the remainder for one tested outcome."""
    out = np.ones((1, 1))
    for i, a in enumerate(outcome[:-1]):
        out = np.kron(out, annihilation_stack(layout.base.dims[i], layout.copies[i])[a])
    e = np.zeros((1, layout.base.dims[-1]))
    e[0, outcome[-1]] = 1.0
    return np.kron(out, e)


def tested_marginal(state: BosonicState) -> RealOperator:
    """Reduced state on the tested registers (first copy of each block, last register)."""
    layout = state.layout
    base = layout.base
    outcomes = list(_tested_outcomes(layout))
    if not state.is_density:
        tensor_state = state.data.reshape(layout.compressed_shape)
        rows = [_project_pure(tensor_state, layout, oc).reshape(-1) for oc in outcomes]
        stacked = np.stack(rows)
        return RealOperator(base, stacked @ stacked.T)
    if state.layout.compressed_dim > DENSITY_DIM_CAP:
        raise ValueError("density path capped at small compressed dimensions")
    mats = [_tested_outcome_matrix(layout, oc) for oc in outcomes]
    rho = state.data
    out = np.zeros((len(outcomes), len(outcomes)))
    half = [k @ rho for k in mats]
    for i in range(len(outcomes)):
        for j in range(len(outcomes)):
            out[i, j] = float(np.sum(half[i] * mats[j]))
    return RealOperator(base, out)


def measured_distribution(state: BosonicState) -> JointDistribution:
    """Computational-basis distribution of the tested registers."""
    probs = np.clip(np.diag(tested_marginal(state).entries), 0.0, None)
    total = probs.sum()
    return JointDistribution(state.layout.base, probs / total)


def tested_value(state: BosonicState, m_op: RealOperator) -> float:
    """Tr[M rho_tested]."""
    if m_op.layout.dims != state.layout.base.dims:
        raise ValueError("operator layout does not match the tested registers")
    rho = tested_marginal(state).entries
    return float(np.sum(m_op.entries * rho.T))


@dataclass(frozen=True)
class DirectRoundResult:
    witness: ProductWitness
    gamma: float
    tested: float
    achieved: float
    bound_holds: bool


def direct_round(
    state: BosonicState, m_op: RealOperator, slack: float = 1e-9
) -> DirectRoundResult:
    """Round to the square roots of the measured one-coordinate marginals.

    The achieved product value is at least the tested value minus
    2*sqrt(2) times the Hellinger distance between the measured
    distribution and the product of its marginals.
    """
    if not is_entrywise_nonneg(m_op, tol=1e-12):
        raise ValueError("test matrix must be entrywise nonnegative")
    require_symmetric(m_op.entries)
    p = measured_distribution(state)
    m = p.num_coordinates
    factors = []
    for i in range(m):
        f = np.sqrt(marginal(p, [i]).probs)
        factors.append(f / np.linalg.norm(f))
    witness = ProductWitness(tuple(factors))
    gamma = hellinger(p, product_of_marginals(p))
    tested = tested_value(state, m_op)
    achieved = product_value(m_op, witness)
    holds = achieved >= tested - 2.0 * math.sqrt(2.0) * gamma - slack
    return DirectRoundResult(witness, gamma, tested, achieved, bool(holds))


@dataclass(frozen=True)
class ConditionOutcome:
    outcome: int
    weight: float
    residual: BosonicState


def condition_step(state: BosonicState, block: int) -> list[ConditionOutcome]:
    """Measure the tested copy of one block and return the normalized residuals.

    The residuals keep one fewer copy in that block and remain
    separately bosonic by construction; zero-weight outcomes are
    dropped.  The weighted tested values of the residuals reproduce the
    tested value of the input exactly.
    """
    layout = state.layout
    if not 0 <= block < layout.num_blocks:
        raise ValueError("block index out of range")
    if layout.copies[block] < 2:
        raise ValueError("block has no spare copy to condition on")
    d = layout.base.dims[block]
    new_copies = tuple(
        r - 1 if i == block else r for i, r in enumerate(layout.copies)
    )
    new_layout = ExtensionLayout(layout.base, new_copies)
    stack = annihilation_stack(d, layout.copies[block])
    outcomes: list[ConditionOutcome] = []
    if not state.is_density:
        tensor_state = state.data.reshape(layout.compressed_shape)
        for a in range(d):
            v = np.moveaxis(np.tensordot(stack[a], tensor_state, axes=(1, block)), 0, block)
            weight = float(np.sum(v * v))
            if weight <= ZERO_WEIGHT_TOL:
                continue
            residual = BosonicState.from_compressed_vector(
                new_layout, v.reshape(-1) / math.sqrt(weight)
            )
            outcomes.append(ConditionOutcome(a, weight, residual))
        return outcomes
    if layout.compressed_dim > DENSITY_DIM_CAP:
        raise ValueError("density path capped at small compressed dimensions")
    for a in range(d):
        k = _block_operator(layout, block, stack[a])
        sub = k @ state.data @ k.T
        weight = float(np.trace(sub))
        if weight <= ZERO_WEIGHT_TOL:
            continue
        residual = BosonicState.from_compressed_density(new_layout, sub / weight)
        outcomes.append(ConditionOutcome(a, weight, residual))
    return outcomes


def potential(state: BosonicState, m_op: RealOperator, mu: float) -> float:
    """Tested value minus mu times the tested entropy."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return tested_value(state, m_op) - mu * entropy(measured_distribution(state))


@dataclass(frozen=True)
class RoundingSchedule:
    """Accuracy target and the derived conditioning parameters."""

    epsilon: float
    entropy_budget: float
    delta: float
    mu: float
    max_steps: int

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.delta <= 0 or self.mu <= 0 or self.max_steps < 1:
            raise ValueError("invalid schedule parameters")

    @classmethod
    def for_instance(
        cls, base: RegisterLayout, epsilon: float, max_steps: int | None = None
    ) -> "RoundingSchedule":
        m = base.num_registers
        budget = max(1.0, sum(math.log(d) for d in base.dims))
        delta = epsilon / (4.0 * math.sqrt(2.0) * (m - 1))
        mu = epsilon / (4.0 * budget)
        if max_steps is None:
            max_steps = max(1, math.ceil(128.0 * budget * (m - 1) ** 2 / epsilon**3))
        return cls(epsilon, budget, delta, mu, max_steps)


@dataclass(frozen=True)
class RoundingStep:
    block: int
    outcome: int
    weight: float
    tested: float
    tested_entropy: float
    potential_value: float
    value_residual_gap: float
    potential_gain: float
    hellinger_gap: float


@dataclass
class RoundingTrace:
    initial_tested: float
    initial_entropy: float
    initial_potential: float
    steps: list[RoundingStep] = field(default_factory=list)
    stopped_reason: str = "independent"
    final_gamma: float = 0.0


@dataclass(frozen=True)
class AdaptiveRoundResult:
    witness: ProductWitness
    trace: RoundingTrace
    achieved: float
    certified_loss: float
    epsilon: float


def adaptive_round(
    state: BosonicState, m_op: RealOperator, schedule: RoundingSchedule
) -> AdaptiveRoundResult:
    """Condition until every tested coordinate is nearly independent, then round.

    Block choice: the largest Hellinger violation (ties to the smallest
    index).  Outcome choice: the best potential (ties to the smallest
    outcome).  If copies run out or the step budget is hit before the
    independence test passes, the final rounding still runs and its
    distance bound still holds with the achieved gamma; the trace
    records why the loop stopped.
    """
    if not is_entrywise_nonneg(m_op, tol=1e-12):
        raise ValueError("test matrix must be entrywise nonnegative")
    require_symmetric(m_op.entries)
    current = state
    value = tested_value(current, m_op)
    dist = measured_distribution(current)
    ent = entropy(dist)
    phi = value - schedule.mu * ent
    trace = RoundingTrace(value, ent, phi)
    m = state.layout.base.num_registers
    while True:
        gaps = [coordinate_independence_gap(dist, i) for i in range(m - 1)]
        worst = int(np.argmax(gaps))
        if gaps[worst] <= schedule.delta:
            trace.stopped_reason = "independent"
            break
        if len(trace.steps) >= schedule.max_steps:
            trace.stopped_reason = "step-budget"
            break
        if current.layout.copies[worst] < 2:
            trace.stopped_reason = "copies-exhausted"
            break
        outcomes = condition_step(current, worst)
        residual_values = [tested_value(oc.residual, m_op) for oc in outcomes]
        value_gap = abs(sum(oc.weight * rv for oc, rv in zip(outcomes, residual_values)) - value)
        potentials = [
            rv - schedule.mu * entropy(measured_distribution(oc.residual))
            for oc, rv in zip(outcomes, residual_values)
        ]
        pick = int(np.argmax(potentials))
        chosen = outcomes[pick]
        new_value = residual_values[pick]
        new_dist = measured_distribution(chosen.residual)
        new_ent = entropy(new_dist)
        new_phi = potentials[pick]
        trace.steps.append(
            RoundingStep(
                block=worst,
                outcome=chosen.outcome,
                weight=chosen.weight,
                tested=new_value,
                tested_entropy=new_ent,
                potential_value=new_phi,
                value_residual_gap=value_gap,
                potential_gain=new_phi - phi,
                hellinger_gap=gaps[worst],
            )
        )
        current, value, dist, ent, phi = chosen.residual, new_value, new_dist, new_ent, new_phi
    rounded = direct_round(current, m_op)
    trace.final_gamma = rounded.gamma
    loss = trace.initial_tested - rounded.achieved
    return AdaptiveRoundResult(
        witness=rounded.witness,
        trace=trace,
        achieved=rounded.achieved,
        certified_loss=float(loss),
        epsilon=schedule.epsilon,
    )
