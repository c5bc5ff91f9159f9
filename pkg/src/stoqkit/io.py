"""Instance and report files: JSON payloads, seeded generators, CSV tables.

Instances are diff-able structured text: matrices dense row-major with
explicit dims, circuits as gate lists with named ops.  JSON floats use
shortest round-trip repr, so serialization is loss-free.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .circuits import (
    Cnot,
    ControlledSubcircuit,
    Gate,
    Not,
    ReversibleCircuit,
    Swap,
    Toffoli,
    WirePermutation,
)
from .distances import JointDistribution
from .rounding import BosonicState
from .symmetric import ExtensionLayout
from .tensor import RealOperator, RegisterLayout
from .verifier import AncillaSpec, BranchOverlapVerifier

FORMAT_VERSION = 1
INSTANCE_KINDS = ("verifier", "matrix", "distribution", "bosonic-state")


@dataclass(frozen=True)
class InstanceFile:
    kind: str
    payload: dict
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in INSTANCE_KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}")


def _encode_gate(gate: Gate) -> dict:
    if isinstance(gate, Not):
        return {"op": "NOT", "target": gate.target}
    if isinstance(gate, Cnot):
        return {"op": "CNOT", "control": gate.control, "target": gate.target}
    if isinstance(gate, Toffoli):
        return {
            "op": "TOFFOLI",
            "control_a": gate.control_a,
            "control_b": gate.control_b,
            "target": gate.target,
        }
    if isinstance(gate, Swap):
        return {"op": "SWAP", "a": gate.a, "b": gate.b}
    if isinstance(gate, WirePermutation):
        return {"op": "WIRE_PERMUTATION", "bits": list(gate.bits), "perm": list(gate.perm)}
    if isinstance(gate, ControlledSubcircuit):
        return {
            "op": "CONTROLLED_SUBCIRCUIT",
            "control": gate.control,
            "subcircuit": encode_circuit(gate.subcircuit),
        }
    raise TypeError(f"unknown gate {gate!r}")


def _decode_gate(obj: dict, num_bits: int) -> Gate:
    op = obj["op"]
    if op == "NOT":
        return Not(obj["target"])
    if op == "CNOT":
        return Cnot(obj["control"], obj["target"])
    if op == "TOFFOLI":
        return Toffoli(obj["control_a"], obj["control_b"], obj["target"])
    if op == "SWAP":
        return Swap(obj["a"], obj["b"])
    if op == "WIRE_PERMUTATION":
        return WirePermutation(tuple(obj["bits"]), tuple(obj["perm"]))
    if op == "CONTROLLED_SUBCIRCUIT":
        return ControlledSubcircuit(obj["control"], decode_circuit(obj["subcircuit"]))
    raise ValueError(f"unknown gate op {op!r}")


def encode_circuit(circuit: ReversibleCircuit) -> dict:
    return {
        "num_bits": circuit.num_bits,
        "gates": [_encode_gate(g) for g in circuit.gates],
    }


def decode_circuit(obj: dict) -> ReversibleCircuit:
    n = obj["num_bits"]
    return ReversibleCircuit(n, tuple(_decode_gate(g, n) for g in obj["gates"]))


def encode_verifier(v: BranchOverlapVerifier) -> dict:
    return {
        "witness_groups": list(v.witness_groups),
        "ancilla": {"z": v.ancilla.z, "r": v.ancilla.r},
        "circuit": encode_circuit(v.circuit),
    }


def decode_verifier(payload: dict) -> BranchOverlapVerifier:
    return BranchOverlapVerifier(
        tuple(payload["witness_groups"]),
        AncillaSpec(payload["ancilla"]["z"], payload["ancilla"]["r"]),
        decode_circuit(payload["circuit"]),
    )


def encode_matrix(op: RealOperator) -> dict:
    return {"dims": list(op.layout.dims), "entries": op.entries.tolist()}


def decode_matrix(payload: dict) -> RealOperator:
    return RealOperator(RegisterLayout(tuple(payload["dims"])), np.array(payload["entries"]))


def encode_distribution(p: JointDistribution) -> dict:
    return {"dims": list(p.layout.dims), "probs": p.flat().tolist()}


def decode_distribution(payload: dict) -> JointDistribution:
    layout = RegisterLayout(tuple(payload["dims"]))
    return JointDistribution.from_flat(layout, payload["probs"])


def encode_bosonic(state: BosonicState) -> dict:
    out: dict[str, Any] = {
        "base_dims": list(state.layout.base.dims),
        "copies": list(state.layout.copies),
        "representation": "density" if state.is_density else "pure",
    }
    if state.is_density:
        out["matrix"] = state.data.tolist()
    else:
        out["vector"] = state.data.tolist()
    return out


def decode_bosonic(payload: dict) -> BosonicState:
    layout = ExtensionLayout(
        RegisterLayout(tuple(payload["base_dims"])), tuple(payload["copies"])
    )
    if payload["representation"] == "density":
        return BosonicState.from_compressed_density(layout, np.array(payload["matrix"]))
    return BosonicState.from_compressed_vector(layout, np.array(payload["vector"]))


_DECODERS = {
    "verifier": decode_verifier,
    "matrix": decode_matrix,
    "distribution": decode_distribution,
    "bosonic-state": decode_bosonic,
}


def decode_instance(instance: InstanceFile):
    return _DECODERS[instance.kind](instance.payload)


def save_instance(instance: InstanceFile, path) -> None:
    Path(path).write_text(json.dumps(asdict(instance), indent=1, sort_keys=True))


def load_instance(path) -> InstanceFile:
    obj = json.loads(Path(path).read_text())
    return InstanceFile(
        kind=obj["kind"],
        payload=obj["payload"],
        metadata=obj.get("metadata", {}),
        format_version=obj.get("format_version", FORMAT_VERSION),
    )


# ---------------------------------------------------------------- generators

GATE_POOL = ("NOT", "CNOT", "TOFFOLI", "SWAP")


def _op_arity(op: str) -> int:
    return {"NOT": 1, "CNOT": 2, "TOFFOLI": 3, "SWAP": 2}[op]


def _random_circuit(rng: np.random.Generator, num_bits: int, num_gates: int) -> ReversibleCircuit:
    gates: list[Gate] = []
    for _ in range(num_gates):
        choices = [op for op in GATE_POOL if _op_arity(op) <= num_bits]
        op = choices[rng.integers(len(choices))]
        bits = rng.choice(num_bits, size=_op_arity(op), replace=False)
        if op == "NOT":
            gates.append(Not(int(bits[0])))
        elif op == "CNOT":
            gates.append(Cnot(int(bits[0]), int(bits[1])))
        elif op == "TOFFOLI":
            gates.append(Toffoli(int(bits[0]), int(bits[1]), int(bits[2])))
        else:
            gates.append(Swap(int(bits[0]), int(bits[1])))
    return ReversibleCircuit(num_bits, tuple(gates))


def generate_verifier(params: dict, rng: np.random.Generator) -> dict:
    groups = tuple(params.get("witness_groups", (1, 1)))
    z = int(params.get("z", 1))
    r = int(params.get("r", 2))
    num_gates = int(params.get("gates", 12))
    n = sum(groups) + z + r
    v = BranchOverlapVerifier(groups, AncillaSpec(z, r), _random_circuit(rng, n, num_gates))
    return encode_verifier(v)


def generate_nonneg_psd(params: dict, rng: np.random.Generator) -> dict:
    dims = tuple(int(d) for d in params.get("dims", (2, 2)))
    scale = float(params.get("scale", 1.0))
    n = math.prod(dims)
    b = rng.random((n, n))
    gram = b.T @ b
    top = float(np.linalg.eigvalsh(gram)[-1])
    m = RealOperator(RegisterLayout(dims), gram / top * scale)
    return encode_matrix(m)


def generate_planted(params: dict, rng: np.random.Generator) -> tuple[dict, dict]:
    dims = tuple(int(d) for d in params.get("dims", (2, 2)))
    weight = float(params.get("weight", 0.5))
    noise = decode_matrix(generate_nonneg_psd({"dims": dims, "scale": 1.0}, rng))
    factors = []
    for d in dims:
        f = rng.random(d) + 0.05
        factors.append(f / np.linalg.norm(f))
    u = np.ones(1)
    for f in factors:
        u = np.kron(u, f)
    entries = (1.0 - weight) * noise.entries + weight * np.outer(u, u)
    m = RealOperator(RegisterLayout(dims), entries)
    extra = {
        "planted_factors": [f.tolist() for f in factors],
        "planted_value": float(u @ entries @ u),
    }
    return encode_matrix(m), extra


def generate_max_entangled(params: dict) -> dict:
    d = int(params.get("d", 2))
    m = maximally_entangled_projector(d)
    return encode_matrix(m)


def maximally_entangled_projector(d: int) -> RealOperator:
    """Projector onto the uniform superposition of |i,i>; product value 1/d."""
    layout = RegisterLayout((d, d))
    phi = np.zeros(d * d)
    for i in range(d):
        phi[layout.ravel((i, i))] = 1.0 / math.sqrt(d)
    return RealOperator(layout, np.outer(phi, phi))


def generate_instance(kind: str, params: dict, seed: int) -> InstanceFile:
    """Deterministic instance from (kind, params, seed)."""
    rng = np.random.default_rng(seed)
    metadata = {"seed": int(seed), "generator": kind, "params": dict(params)}
    if kind == "random-verifier":
        payload = generate_verifier(params, rng)
        metadata["dims"] = [2**g for g in payload["witness_groups"]]
        return InstanceFile("verifier", payload, metadata)
    if kind == "nonneg-psd":
        payload = generate_nonneg_psd(params, rng)
        metadata["dims"] = payload["dims"]
        return InstanceFile("matrix", payload, metadata)
    if kind == "planted":
        payload, extra = generate_planted(params, rng)
        metadata["dims"] = payload["dims"]
        metadata.update(extra)
        return InstanceFile("matrix", payload, metadata)
    if kind == "max-entangled":
        payload = generate_max_entangled(params)
        metadata["dims"] = payload["dims"]
        return InstanceFile("matrix", payload, metadata)
    raise ValueError(f"unknown generator {kind!r}")


# ------------------------------------------------------------------ reports


@dataclass(frozen=True)
class CheckRecord:
    """One verified inequality: both sides, the tolerance, and the verdict."""

    name: str
    statement: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    values: dict = field(default_factory=dict)


@dataclass
class ReportFile:
    suite: str
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        total = len(self.checks)
        passed = sum(1 for c in self.checks if c.passed)
        return {"total": total, "passed": passed, "failed": total - passed}

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def sorted(self) -> "ReportFile":
        out = ReportFile(self.suite)
        out.checks = sorted(self.checks, key=lambda c: c.name)
        return out

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "checks": [asdict(c) for c in self.checks],
            "summary": self.summary,
        }


def save_report(report: ReportFile, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))


def report_csv_rows(report: ReportFile) -> list[list]:
    rows = [["name", "statement", "lhs", "rhs", "tolerance", "passed"]]
    for c in report.checks:
        rows.append([c.name, c.statement, c.lhs, c.rhs, c.tolerance, int(c.passed)])
    return rows


def save_report_csv(report: ReportFile, path) -> None:
    import csv

    with open(path, "w", newline="") as handle:
        csv.writer(handle).writerows(report_csv_rows(report))
