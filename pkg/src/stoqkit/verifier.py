"""Branch-overlap normal form of stoquastic verification.

A verifier is a reversible circuit acting on witness bits followed by
initialized ancillas (|0> block, then |+> block).  Compressing the
circuit by the ancilla state yields the raw overlap matrix G, the
Hermitian overlap H = (G + G^T)/2, and the acceptance matrix
M = (I + H)/2.  All compressed entries are dyadic rationals, so the
matrices here are exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import (
    SIM_CAP_BITS,
    ControlledSubcircuit,
    ReversibleCircuit,
    apply_circuit,
)
from .tensor import RealOperator, RegisterLayout

WITNESS_NORM_TOL = 1e-10


@dataclass(frozen=True)
class AncillaSpec:
    """Counts of |0>-initialized and |+>-initialized ancilla bits."""

    z: int
    r: int

    def __post_init__(self):
        if self.z < 0 or self.r < 0:
            raise ValueError("ancilla counts must be nonnegative")


@dataclass(frozen=True)
class BranchOverlapVerifier:
    """Reversible circuit plus ancilla spec, grouped witness bits first."""

    witness_groups: tuple[int, ...]
    ancilla: AncillaSpec
    circuit: ReversibleCircuit

    def __post_init__(self):
        object.__setattr__(self, "witness_groups", tuple(int(g) for g in self.witness_groups))
        if not self.witness_groups or any(g < 1 for g in self.witness_groups):
            raise ValueError("witness groups must be positive bit counts")
        expected = self.witness_bits + self.ancilla.z + self.ancilla.r
        if self.circuit.num_bits != expected:
            raise ValueError(
                f"circuit has {self.circuit.num_bits} bits, expected {expected}"
            )

    @property
    def witness_bits(self) -> int:
        return sum(self.witness_groups)

    @property
    def witness_layout(self) -> RegisterLayout:
        """One register per witness group, dimension 2^bits."""
        return RegisterLayout(tuple(2**g for g in self.witness_groups))

    @property
    def num_bits(self) -> int:
        return self.circuit.num_bits


def raw_overlap(v: BranchOverlapVerifier, cap: int = SIM_CAP_BITS) -> RealOperator:
    """Compression of the circuit permutation by the ancilla state.

    G[w', w] counts the |+>-branches that map (w, 0, t) to (w', 0, t'),
    weighted 2^-r each, so every entry is an exact dyadic rational.
    """
    if v.num_bits > cap:
        raise ValueError(f"verifier has {v.num_bits} bits, above the cap of {cap}")
    w, z, r = v.witness_bits, v.ancilla.z, v.ancilla.r
    wit = np.arange(1 << w, dtype=np.int64)
    branch = np.arange(1 << r, dtype=np.int64)
    inputs = ((wit[:, None] << (z + r)) | branch[None, :]).reshape(-1)
    outputs = apply_circuit(v.circuit, inputs)
    w_in = inputs >> (z + r)
    w_out = outputs >> (z + r)
    z_out = (outputs >> r) & ((1 << z) - 1)
    keep = z_out == 0
    counts = np.zeros((1 << w, 1 << w))
    np.add.at(counts, (w_out[keep], w_in[keep]), 1.0)
    return RealOperator(v.witness_layout, counts / float(1 << r))


def hermitian_overlap(v: BranchOverlapVerifier, cap: int = SIM_CAP_BITS) -> RealOperator:
    g = raw_overlap(v, cap)
    return RealOperator(g.layout, (g.entries + g.entries.T) / 2.0)


def acceptance_matrix(v: BranchOverlapVerifier, cap: int = SIM_CAP_BITS) -> RealOperator:
    h = hermitian_overlap(v, cap)
    return RealOperator(h.layout, (np.eye(h.dim) + h.entries) / 2.0)


def _check_witness(v: BranchOverlapVerifier, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=float).reshape(-1)
    if psi.size != 1 << v.witness_bits:
        raise ValueError("witness vector has the wrong dimension")
    if abs(np.linalg.norm(psi) - 1.0) > WITNESS_NORM_TOL:
        raise ValueError("witness vector is not normalized")
    return psi


def acceptance_probability(
    v: BranchOverlapVerifier, psi: np.ndarray, cap: int = SIM_CAP_BITS
) -> float:
    """Acceptance probability (1 + <psi, H psi>)/2 of a unit witness."""
    psi = _check_witness(v, psi)
    h = hermitian_overlap(v, cap)
    return float(0.5 * (1.0 + psi @ h.entries @ psi))


def simulate_standard_model(
    v: BranchOverlapVerifier, psi: np.ndarray, cap: int = SIM_CAP_BITS
) -> float:
    """Acceptance probability computed by direct state-vector simulation.

    Adds an output bit in |+>, runs the circuit controlled on that bit,
    and returns (1 + <X_output>)/2.  Cross-checks the compressed path.
    """
    psi = _check_witness(v, psi)
    n = v.num_bits
    if n + 1 > cap:
        raise ValueError("standard-model simulation exceeds the bit cap")
    controlled = ReversibleCircuit(
        n + 1, (ControlledSubcircuit(0, v.circuit.shifted(1, n + 1)),)
    )
    z, r = v.ancilla.z, v.ancilla.r
    eta = np.zeros(1 << (z + r))
    eta[: 1 << r] = 2.0 ** (-r / 2.0)  # |0^z>|+^r> with z bits most significant
    plus = np.full(2, 1.0 / math.sqrt(2.0))
    state = np.kron(plus, np.kron(psi, eta))
    index_map = apply_circuit(controlled, np.arange(1 << (n + 1), dtype=np.int64))
    evolved = np.zeros_like(state)
    evolved[index_map] = state
    flip_mask = 1 << n  # output bit is bit 0, the most significant
    flipped = evolved[np.arange(1 << (n + 1)) ^ flip_mask]
    expectation = float(evolved @ flipped)
    return 0.5 * (1.0 + expectation)


def acceptance_as_overlap(
    v: BranchOverlapVerifier, cap: int = SIM_CAP_BITS
) -> BranchOverlapVerifier:
    """Verifier whose Hermitian overlap equals the input's acceptance matrix.

    One |+> branch bit is appended; the original circuit runs only when
    that bit is 1, so the new raw overlap is (I + G)/2 exactly.
    """
    n = v.num_bits
    if n + 1 > cap:
        raise ValueError("branch bit would exceed the bit cap")
    inner = v.circuit.shifted(0, n + 1)
    gates = (ControlledSubcircuit(n, inner),)
    return BranchOverlapVerifier(
        v.witness_groups,
        AncillaSpec(v.ancilla.z, v.ancilla.r + 1),
        ReversibleCircuit(n + 1, gates),
    )
