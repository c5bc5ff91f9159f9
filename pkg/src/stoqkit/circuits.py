"""Reversible circuits over bits, simulated exactly as basis-index maps.

Bit 0 is the most significant bit of a basis index, matching the
C-order raveling used for register layouts.  Permutation matrices are
kept as index maps; dense matrices only appear on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .tensor import RealOperator, RegisterLayout

SIM_CAP_BITS = 20


@dataclass(frozen=True)
class Not:
    target: int


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int


@dataclass(frozen=True)
class Toffoli:
    control_a: int
    control_b: int
    target: int


@dataclass(frozen=True)
class Swap:
    a: int
    b: int


@dataclass(frozen=True)
class WirePermutation:
    """Route a named bit block: the content of block position j moves to position perm[j]."""

    bits: tuple[int, ...]
    perm: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))


@dataclass(frozen=True)
class ControlledSubcircuit:
    """Apply a subcircuit (on the same bit space) when the control bit is 1."""

    control: int
    subcircuit: "ReversibleCircuit"


Gate = Union[Not, Cnot, Toffoli, Swap, WirePermutation, ControlledSubcircuit]


def _gate_bits(gate: Gate) -> tuple[int, ...]:
    if isinstance(gate, Not):
        return (gate.target,)
    if isinstance(gate, Cnot):
        return (gate.control, gate.target)
    if isinstance(gate, Toffoli):
        return (gate.control_a, gate.control_b, gate.target)
    if isinstance(gate, Swap):
        return (gate.a, gate.b)
    if isinstance(gate, WirePermutation):
        return gate.bits
    if isinstance(gate, ControlledSubcircuit):
        return (gate.control,)
    raise TypeError(f"unknown gate {gate!r}")


def _touched_bits(gate: Gate) -> set[int]:
    if isinstance(gate, ControlledSubcircuit):
        touched = {gate.control}
        for g in gate.subcircuit.gates:
            touched |= _touched_bits(g)
        return touched
    return set(_gate_bits(gate))


@dataclass(frozen=True)
class ReversibleCircuit:
    num_bits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        n = self.num_bits
        for gate in self.gates:
            bits = _gate_bits(gate)
            if len(set(bits)) != len(bits):
                raise ValueError(f"repeated bit in gate {gate!r}")
            if any(not 0 <= b < n for b in bits):
                raise ValueError(f"bit index out of range in gate {gate!r}")
            if isinstance(gate, WirePermutation):
                if sorted(gate.perm) != list(range(len(gate.bits))):
                    raise ValueError("wire permutation is not a permutation")
            if isinstance(gate, ControlledSubcircuit):
                sub = gate.subcircuit
                if sub.num_bits != n:
                    raise ValueError("subcircuit must share the parent bit space")
                if any(gate.control in _touched_bits(g) for g in sub.gates):
                    raise ValueError("subcircuit may not touch its control bit")

    def shifted(self, offset: int, num_bits: int) -> "ReversibleCircuit":
        """Same circuit with every bit index moved by offset inside a larger space."""
        return ReversibleCircuit(num_bits, tuple(_shift_gate(g, offset, num_bits) for g in self.gates))


def _shift_gate(gate: Gate, offset: int, num_bits: int) -> Gate:
    if isinstance(gate, Not):
        return Not(gate.target + offset)
    if isinstance(gate, Cnot):
        return Cnot(gate.control + offset, gate.target + offset)
    if isinstance(gate, Toffoli):
        return Toffoli(gate.control_a + offset, gate.control_b + offset, gate.target + offset)
    if isinstance(gate, Swap):
        return Swap(gate.a + offset, gate.b + offset)
    if isinstance(gate, WirePermutation):
        return WirePermutation(tuple(b + offset for b in gate.bits), gate.perm)
    if isinstance(gate, ControlledSubcircuit):
        return ControlledSubcircuit(
            gate.control + offset, gate.subcircuit.shifted(offset, num_bits)
        )
    raise TypeError(f"unknown gate {gate!r}")


def _mask(circuit_bits: int, bit: int) -> int:
    return 1 << (circuit_bits - 1 - bit)


def _apply_gate(gate: Gate, states: np.ndarray, n: int) -> np.ndarray:
    if isinstance(gate, Not):
        return states ^ _mask(n, gate.target)
    if isinstance(gate, Cnot):
        on = (states & _mask(n, gate.control)) != 0
        return states ^ (on * _mask(n, gate.target))
    if isinstance(gate, Toffoli):
        on = ((states & _mask(n, gate.control_a)) != 0) & (
            (states & _mask(n, gate.control_b)) != 0
        )
        return states ^ (on * _mask(n, gate.target))
    if isinstance(gate, Swap):
        ma, mb = _mask(n, gate.a), _mask(n, gate.b)
        va = (states & ma) != 0
        vb = (states & mb) != 0
        differ = va ^ vb
        return states ^ (differ * (ma | mb))
    if isinstance(gate, WirePermutation):
        masks = [_mask(n, b) for b in gate.bits]
        cleared = states & ~np.int64(sum(masks))
        out = cleared
        for j, dest in enumerate(gate.perm):
            bit_val = (states & masks[j]) != 0
            out = out | (bit_val * masks[dest])
        return out
    if isinstance(gate, ControlledSubcircuit):
        on = (states & _mask(n, gate.control)) != 0
        out = states.copy()
        out[on] = apply_circuit(gate.subcircuit, states[on])
        return out
    raise TypeError(f"unknown gate {gate!r}")


def apply_circuit(circuit: ReversibleCircuit, states: np.ndarray) -> np.ndarray:
    """Image of the given basis indices under the circuit permutation."""
    out = np.asarray(states, dtype=np.int64)
    for gate in circuit.gates:
        out = _apply_gate(gate, out, circuit.num_bits)
    return out


def circuit_index_map(circuit: ReversibleCircuit, cap: int = SIM_CAP_BITS) -> np.ndarray:
    if circuit.num_bits > cap:
        raise ValueError(f"circuit has {circuit.num_bits} bits, above the cap of {cap}")
    return apply_circuit(circuit, np.arange(1 << circuit.num_bits, dtype=np.int64))


def circuit_permutation(circuit: ReversibleCircuit, cap: int = SIM_CAP_BITS) -> RealOperator:
    """Dense permutation matrix of the circuit (small bit counts only)."""
    index_map = circuit_index_map(circuit, cap)
    dim = index_map.size
    u = np.zeros((dim, dim))
    u[index_map, np.arange(dim)] = 1.0
    return RealOperator(RegisterLayout((2,) * circuit.num_bits), u)


def controlled_on_value(
    control_bits: tuple[int, ...],
    value: int,
    body: ReversibleCircuit,
    scratch_bits: tuple[int, ...],
) -> tuple[Gate, ...]:
    """Gates applying ``body`` exactly when the control register equals ``value``.

    The flag is computed into scratch (|0> bits) with a Toffoli chain and
    uncomputed afterwards, so scratch returns to |0> on every branch.
    control_bits[0] is the most significant bit of the register value.
    """
    q = len(control_bits)
    if not 0 <= value < (1 << q):
        raise ValueError("value out of range for control register")
    flips = tuple(
        Not(b) for j, b in enumerate(control_bits) if ((value >> (q - 1 - j)) & 1) == 0
    )
    if q == 1:
        core: tuple[Gate, ...] = (ControlledSubcircuit(control_bits[0], body),)
    else:
        if len(scratch_bits) < q - 1:
            raise ValueError(f"need {q - 1} scratch bits, got {len(scratch_bits)}")
        chain: list[Gate] = [Toffoli(control_bits[0], control_bits[1], scratch_bits[0])]
        for j in range(2, q):
            chain.append(Toffoli(scratch_bits[j - 2], control_bits[j], scratch_bits[j - 1]))
        flag = scratch_bits[q - 2]
        core = tuple(chain) + (ControlledSubcircuit(flag, body),) + tuple(reversed(chain))
    return flips + core + tuple(reversed(flips))
