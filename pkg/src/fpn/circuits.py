"""Noisy memory-experiment circuits over scheduled layouts.

Instruction set: H, CNOT, R, M, PAULI_CHANNEL, DETECTOR, OBSERVABLE,
FLAG_BIT.  Channel argument conventions:

* ``PAULI_CHANNEL`` with three args ``(px, py, pz)`` acts independently on
  each target qubit.
* ``PAULI_CHANNEL`` with one arg and exactly two targets is the joint
  two-qubit depolarizing channel with total probability ``arg`` (each of the
  15 non-identity Pauli pairs with probability ``arg/15``).
* ``M`` with one arg flips each recorded bit independently with that
  probability (record-only; the post-measurement state is unaffected).

Noise placement per round: a start-of-round Pauli twirl on every qubit with
relaxation/dephasing probabilities for one round duration, depolarizing
noise after every gate, idle depolarizing on every qubit not acted on in
each CNOT layer, measurement record flips, and X errors after resets.

Detector convention: det(K, r) = parity(K, r) xor parity(K, r-1) for r >= 2;
round-1 detectors exist only for checks whose basis matches the prepared
basis; final detectors compare the last parity measurement against the
reconstruction from the transversal data measurement, for basis-matching
checks only.  Flag measurements are exposed as FLAG_BITs, never detectors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from fpn.layout import FpnLayout
from fpn.scheduling import CnotSchedule, round_latency


@dataclass(frozen=True)
class TwirlProbabilities:
    p_x: float
    p_y: float
    p_z: float


def twirl_probs(t_ns: float, t1_ns: float, t2_ns: float) -> TwirlProbabilities:
    """Pauli-twirled amplitude damping + dephasing over a duration t."""
    e1 = math.exp(-t_ns / t1_ns)
    e2 = math.exp(-t_ns / t2_ns)
    p_x = (1.0 - e1) / 4.0
    p_z = (1.0 - 2.0 * e2 + e1) / 4.0
    return TwirlProbabilities(p_x, p_x, p_z)


@dataclass(frozen=True)
class NoiseModel:
    """Single-parameter circuit noise; all strengths derive from p."""

    p: float = 0.0

    @property
    def single_qubit_p(self) -> float:
        return 0.1 * self.p

    @property
    def two_qubit_p(self) -> float:
        return self.p

    @property
    def idle_p(self) -> float:
        return 0.1 * self.p

    @property
    def measure_flip_p(self) -> float:
        return self.p

    @property
    def reset_flip_p(self) -> float:
        return 0.1 * self.p

    @property
    def t1_ns(self) -> float:
        return 1000.0 / self.p if self.p else math.inf

    @property
    def t2_ns(self) -> float:
        return self.t1_ns / 2.0


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple[int, ...]
    args: tuple[float, ...] = ()
    tag: str = ""

    def semantic(self):
        return (self.name, self.targets, self.args)


@dataclass
class NoisyCircuit:
    n_qubits: int
    instructions: tuple[Instruction, ...]
    meta: dict = field(default_factory=dict)

    def count(self, name: str, tag: str | None = None) -> int:
        return sum(1 for ins in self.instructions
                   if ins.name == name and (tag is None or ins.tag == tag))

    def channel_targets(self, tag: str) -> int:
        return sum(len(ins.targets) for ins in self.instructions
                   if ins.name == "PAULI_CHANNEL" and ins.tag == tag)

    @property
    def num_measurements(self) -> int:
        return sum(len(ins.targets) for ins in self.instructions
                   if ins.name == "M")

    @property
    def num_detectors(self) -> int:
        return self.count("DETECTOR")

    @property
    def num_observables(self) -> int:
        return self.count("OBSERVABLE")

    @property
    def num_flags(self) -> int:
        return self.count("FLAG_BIT")


def build_memory_circuit(layout: FpnLayout, schedule: CnotSchedule,
                         rounds: int, basis: str = "Z",
                         noise: NoiseModel | None = None) -> NoisyCircuit:
    """Memory experiment: prepare, run syndrome rounds, measure out."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    if schedule.round_ops is None:
        raise ValueError("schedule has no physical round ops; "
                         "lower it with schedule_fpn first")
    noise = noise or NoiseModel(0.0)
    p = noise.p
    code = layout.code

    data = sorted(layout.role_ids("data"))
    flags = sorted(layout.role_ids("flag"))
    proxies = sorted(layout.role_ids("proxy"))
    parity_to_check = {layout.parity_of(c.id): c.id for c in code.checks}
    parities = sorted(parity_to_check)
    ancillas = sorted(parities + flags)
    all_qubits = sorted(q.id for q in layout.qubits)
    n_qubits = max(all_qubits) + 1
    twirl = (twirl_probs(round_latency(schedule), noise.t1_ns, noise.t2_ns)
             if p else None)
    depol1 = (noise.single_qubit_p / 3.0,) * 3
    idle1 = (noise.idle_p / 3.0,) * 3

    ins: list[Instruction] = []

    def emit(name, targets, args=(), tag=""):
        ins.append(Instruction(name, tuple(targets), tuple(args), tag))

    def emit_reset(qubits):
        emit("R", qubits)
        if p:
            emit("PAULI_CHANNEL", qubits, (noise.reset_flip_p, 0.0, 0.0),
                 "reset")

    def emit_h(qubits):
        emit("H", qubits)
        if p:
            emit("PAULI_CHANNEL", qubits, depol1, "gate1")

    nmeas = 0

    def emit_m(qubits) -> dict[int, int]:
        nonlocal nmeas
        emit("M", qubits, (noise.measure_flip_p,) if p else ())
        idx = {q: nmeas + i for i, q in enumerate(qubits)}
        nmeas += len(qubits)
        return idx

    # group the round ops into H runs and CNOT layers once
    groups: list[tuple[str, tuple]] = []
    h_run: list[int] = []
    layer_pairs: list[tuple[int, int]] = []
    layer_id = None
    for op in schedule.round_ops:
        if op[0] == "H":
            if layer_pairs:
                groups.append(("CX", tuple(layer_pairs)))
                layer_pairs, layer_id = [], None
            h_run.append(op[1])
        else:
            if h_run:
                groups.append(("H", tuple(h_run)))
                h_run = []
            _, a, b, lid = op
            if lid != layer_id and layer_pairs:
                groups.append(("CX", tuple(layer_pairs)))
                layer_pairs = []
            layer_id = lid
            layer_pairs.append((a, b))
    if layer_pairs:
        groups.append(("CX", tuple(layer_pairs)))
    if h_run:
        groups.append(("H", tuple(h_run)))

    # prologue: data (and proxies) start in |0>, data rotated for X memory
    emit_reset(data + proxies if proxies else data)
    if basis == "X":
        emit_h(data)

    parity_meas: dict[tuple[int, int], int] = {}
    detector_coords: list[tuple[int, int]] = []
    flag_coords: list[tuple[int, int]] = []
    flag_index = 0
    for r in range(1, rounds + 1):
        if p:
            emit("PAULI_CHANNEL", all_qubits,
                 (twirl.p_x, twirl.p_y, twirl.p_z), "twirl")
        emit_reset(ancillas)
        for kind, payload in groups:
            if kind == "H":
                emit_h(payload)
            else:
                flat = tuple(q for cx in payload for q in cx)
                emit("CNOT", flat)
                if p:
                    for a, b in payload:
                        emit("PAULI_CHANNEL", (a, b), (noise.two_qubit_p,),
                             "gate2")
                    active = set(flat)
                    idle = tuple(q for q in all_qubits if q not in active)
                    if idle:
                        emit("PAULI_CHANNEL", idle, idle1, "idle")
        m_idx = emit_m(ancillas)
        for pq in parities:
            parity_meas[(parity_to_check[pq], r)] = m_idx[pq]
        for f in flags:
            emit("FLAG_BIT", (m_idx[f],), (flag_index,))
            flag_coords.append((f, r))
            flag_index += 1
        for c in sorted(code.checks, key=lambda c: c.id):
            if r == 1:
                if c.basis == basis:
                    emit("DETECTOR", (parity_meas[(c.id, 1)],))
                    detector_coords.append((c.id, 1))
            else:
                emit("DETECTOR", (parity_meas[(c.id, r)],
                                  parity_meas[(c.id, r - 1)]))
                detector_coords.append((c.id, r))

    # transversal data measurement in the memory basis
    if basis == "X":
        emit_h(data)
    data_meas = emit_m(data)
    for c in sorted(code.checks, key=lambda c: c.id):
        if c.basis != basis:
            continue
        targets = (parity_meas[(c.id, rounds)],) + tuple(
            data_meas[q] for q in c.support)
        emit("DETECTOR", targets)
        detector_coords.append((c.id, rounds + 1))
    for i, logical in enumerate(code.logicals_of(basis)):
        emit("OBSERVABLE", tuple(data_meas[q] for q in logical.support), (i,))

    meta = {
        "rounds": rounds,
        "basis": basis,
        "p": p,
        "code": code.name,
        "cnot_layers": schedule.depth,
        "round_latency_ns": round_latency(schedule),
        "detector_coords": tuple(detector_coords),
        "flag_coords": tuple(flag_coords),
    }
    return NoisyCircuit(n_qubits=n_qubits, instructions=tuple(ins), meta=meta)


# --- text serialization ---------------------------------------------------

def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def _from_json(value):
    if isinstance(value, list):
        return tuple(_from_json(v) for v in value)
    return value


def circuit_to_text(circuit: NoisyCircuit) -> str:
    lines = ["FPN_CIRCUIT v1", f"N_QUBITS {circuit.n_qubits}"]
    for key in sorted(circuit.meta):
        lines.append(
            f"META {key} {json.dumps(_jsonable(circuit.meta[key]))}")
    for ins in circuit.instructions:
        head = ins.name
        if ins.args:
            head += "(" + ",".join(f"{a:.17g}" for a in ins.args) + ")"
        if ins.targets:
            head += " " + " ".join(str(t) for t in ins.targets)
        lines.append(head)
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> NoisyCircuit:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0].split() != ["FPN_CIRCUIT", "v1"]:
        raise ValueError("not an FPN_CIRCUIT v1 file")
    if not lines[1].startswith("N_QUBITS "):
        raise ValueError("missing N_QUBITS header")
    n_qubits = int(lines[1].split()[1])
    meta: dict = {}
    ins: list[Instruction] = []
    known = {"H", "CNOT", "R", "M", "PAULI_CHANNEL", "DETECTOR",
             "OBSERVABLE", "FLAG_BIT"}
    for ln in lines[2:]:
        if ln.startswith("META "):
            _, key, value = ln.split(None, 2)
            try:
                meta[key] = _from_json(json.loads(value))
            except json.JSONDecodeError:
                meta[key] = value
            continue
        head, *rest = ln.split()
        if "(" in head:
            name, argtext = head.split("(", 1)
            if not argtext.endswith(")"):
                raise ValueError(f"malformed args in line {ln!r}")
            args = tuple(float(a) for a in argtext[:-1].split(","))
        else:
            name, args = head, ()
        if name not in known:
            raise ValueError(f"unknown instruction {name!r}")
        ins.append(Instruction(name, tuple(int(t) for t in rest), args))
    return NoisyCircuit(n_qubits=n_qubits, instructions=tuple(ins), meta=meta)


def save_circuit(circuit: NoisyCircuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(circuit_to_text(circuit))


def load_circuit(path) -> NoisyCircuit:
    with open(path, encoding="utf-8") as fh:
        return circuit_from_text(fh.read())
