"""Detector error models built by exhaustive single-fault enumeration.

Every elementary fault outcome of a noisy circuit — one Pauli drawn from one
noise channel, or one measurement-record flip — is propagated through the
Clifford instruction stream to its signature:

* ``sigma``  — the set of detectors it flips,
* ``flags``  — the set of flag coordinates ``(flag_qubit, round)`` it raises,
* ``frames`` — the logical observables it flips, as a bitmask.

Faults with identical signatures merge into one hyperedge whose probability
composes via XOR (``p <- p1 + p2 - 2*p1*p2``).  Hyperedges sharing the same
``sigma`` form an equivalence class: syndrome-wise indistinguishable events
told apart only by their flag pattern.  Decoders query a class with the
observed flag set ``F`` and get back the most plausible member.

Propagation is linear over fault frames, so all faults are evolved at once as
columns of boolean frame matrices in a single pass over the circuit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from fpn.circuits import NoisyCircuit, Instruction

__all__ = [
    "Hyperedge",
    "FaultSite",
    "EquivalenceClass",
    "DecodingHypergraph",
    "enumerate_faults",
    "extract_hypergraph",
    "build_equiv_classes",
    "select_representative",
    "detector_marginals",
    "hypergraph_to_json",
    "hypergraph_from_json",
    "save_hypergraph",
    "load_hypergraph",
]

FlagCoord = tuple[int, int]
Atom = tuple[int, str, int]  # (instruction position, X|Y|Z|flip, qubit/record)

# Order in which the 15 non-identity Pauli pairs of a two-qubit
# depolarizing channel are enumerated.
_TWO_QUBIT_PAULIS = tuple(
    a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II")


@dataclass(frozen=True)
class Hyperedge:
    """One error mechanism: detectors + flags it flips, with probability."""

    sigma: frozenset[int]
    flags: frozenset[FlagCoord]
    prob: float
    frames: int = 0

    @property
    def signature(self) -> tuple:
        return (self.sigma, self.flags, self.frames)

    def sort_key(self) -> tuple:
        return (tuple(sorted(self.sigma)), tuple(sorted(self.flags)),
                self.frames)


@dataclass(frozen=True)
class FaultSite:
    """One elementary fault outcome of one noise channel."""

    position: int          # index of the originating instruction
    kind: str              # channel tag ("twirl", "gate2", ...) or "mflip"
    targets: tuple[int, ...]
    pauli: str             # one letter per target, or "flip"
    prob: float
    atoms: tuple[Atom, ...]
    sigma: frozenset[int] = frozenset()
    flags: frozenset[FlagCoord] = frozenset()
    frames: int = 0

    @property
    def signature(self) -> tuple:
        return (self.sigma, self.flags, self.frames)


@dataclass(frozen=True)
class EquivalenceClass:
    """All hyperedges with the same detector set ``sigma``.

    Members are ordered by descending probability, ties broken by the
    lexicographically smallest flag set.
    """

    sigma: frozenset[int]
    members: tuple[Hyperedge, ...]

    def flag_members(self) -> tuple[Hyperedge, ...]:
        return tuple(m for m in self.members if m.flags)

    def spanned_rounds(self, det_rounds=None) -> frozenset[int]:
        rounds = {r for m in self.members for (_, r) in m.flags}
        if det_rounds is not None:
            # a detector at round r compares the measurements of rounds
            # r-1 and r, so faults (and flags) of either round are in scope
            for d in self.sigma:
                rounds.add(det_rounds[d])
                rounds.add(det_rounds[d] - 1)
        return frozenset(rounds)


@dataclass
class DecodingHypergraph:
    """All error mechanisms of a circuit, grouped into equivalence classes."""

    num_detectors: int
    num_flags: int
    num_observables: int
    detector_coords: tuple[tuple[int, int], ...]
    flag_coords: tuple[FlagCoord, ...]
    hyperedges: tuple[Hyperedge, ...]
    p_M: float
    meta: dict = field(default_factory=dict)
    classes: dict[frozenset[int], EquivalenceClass] = field(default=None)

    def __post_init__(self):
        if self.classes is None:
            self.classes = build_equiv_classes(self.hyperedges)

    @property
    def det_rounds(self) -> dict[int, int]:
        return {i: r for i, (_, r) in enumerate(self.detector_coords)}

    def representative(self, sigma, F=frozenset(), renorm: str = "paper"):
        """Representative of the class with detector set ``sigma`` given
        observed flags ``F``; returns ``(Hyperedge, weight)``."""
        cls = self.classes[frozenset(sigma)]
        return select_representative(cls, F, p_M=self.p_M,
                                     det_rounds=self.det_rounds,
                                     renorm=renorm)


# --- fault enumeration ------------------------------------------------------


def _channel_outcomes(pos: int, ins: Instruction, meas_base: int):
    """Yield (kind, targets, pauli, prob, atoms) for one noisy instruction."""
    if ins.name == "M":
        if ins.args:
            flip_p = ins.args[0]
            if flip_p > 0.0:
                for i, _q in enumerate(ins.targets):
                    m = meas_base + i
                    yield ("mflip", (m,), "flip", flip_p,
                           ((pos, "flip", m),))
        return
    if ins.name != "PAULI_CHANNEL":
        return
    tag = ins.tag or "channel"
    if len(ins.args) == 3:
        # independent single-qubit channel on every target
        for q in ins.targets:
            for pauli, pr in zip("XYZ", ins.args):
                if pr > 0.0:
                    yield (tag, (q,), pauli, pr, ((pos, pauli, q),))
    elif len(ins.args) == 1 and len(ins.targets) == 2:
        # joint two-qubit depolarizing channel
        pr = ins.args[0] / 15.0
        if pr > 0.0:
            a, b = ins.targets
            for pauli in _TWO_QUBIT_PAULIS:
                atoms = tuple((pos, P, q) for P, q in zip(pauli, (a, b))
                              if P != "I")
                yield (tag, (a, b), pauli, pr, atoms)
    else:
        raise ValueError(
            f"unsupported PAULI_CHANNEL shape: {len(ins.args)} args, "
            f"{len(ins.targets)} targets")


def _propagate(circuit: NoisyCircuit, injections):
    """Propagate fault columns through the circuit in one pass.

    ``injections[j]`` is a sequence of atoms ``(position, kind, index)``
    applied to column ``j`` immediately after that instruction executes.
    Returns ``(sigma, flags, frames)`` lists, one entry per column.
    """
    nf = len(injections)
    nq = circuit.n_qubits
    fx = np.zeros((nq, nf), dtype=bool)
    fz = np.zeros((nq, nf), dtype=bool)
    rec = np.zeros((circuit.num_measurements, nf), dtype=bool)

    by_pos: dict[int, list[tuple[str, int, int]]] = {}
    for j, atoms in enumerate(injections):
        for pos, kind, idx in atoms:
            by_pos.setdefault(pos, []).append((kind, idx, j))

    det_rows: list[np.ndarray] = []
    obs_rows: list[tuple[int, np.ndarray]] = []
    flag_rows: list[tuple[int, np.ndarray]] = []
    m_next = 0
    for pos, ins in enumerate(circuit.instructions):
        name = ins.name
        if name == "H":
            qs = list(ins.targets)
            tmp = fx[qs].copy()
            fx[qs] = fz[qs]
            fz[qs] = tmp
        elif name == "CNOT":
            for a, b in zip(ins.targets[::2], ins.targets[1::2]):
                fx[b] ^= fx[a]
                fz[a] ^= fz[b]
        elif name == "R":
            qs = list(ins.targets)
            fx[qs] = False
            fz[qs] = False
        elif name == "M":
            for q in ins.targets:
                rec[m_next] = fx[q]
                m_next += 1
        elif name == "PAULI_CHANNEL":
            pass
        elif name == "DETECTOR":
            row = np.zeros(nf, dtype=bool)
            for m in ins.targets:
                row ^= rec[m]
            det_rows.append(row)
        elif name == "OBSERVABLE":
            row = np.zeros(nf, dtype=bool)
            for m in ins.targets:
                row ^= rec[m]
            obs_rows.append((int(ins.args[0]) if ins.args else len(obs_rows),
                             row))
        elif name == "FLAG_BIT":
            idx = int(ins.args[0]) if ins.args else len(flag_rows)
            flag_rows.append((idx, rec[ins.targets[0]].copy()))
        else:
            raise ValueError(f"unsupported instruction {name!r}")
        for kind, idx, j in by_pos.get(pos, ()):
            if kind == "flip":
                rec[idx, j] ^= True
            else:
                if kind in ("X", "Y"):
                    fx[idx, j] ^= True
                if kind in ("Z", "Y"):
                    fz[idx, j] ^= True

    det_mat = (np.array(det_rows) if det_rows
               else np.zeros((0, nf), dtype=bool))
    flag_coords = circuit.meta.get("flag_coords")
    if flag_coords is None:
        flag_coords = tuple((i, 0) for i in range(len(flag_rows)))

    sigmas = [frozenset(np.nonzero(det_mat[:, j])[0].tolist())
              for j in range(nf)]
    flags: list[frozenset[FlagCoord]] = [frozenset() for _ in range(nf)]
    for idx, row in flag_rows:
        coord = tuple(flag_coords[idx])
        for j in np.nonzero(row)[0]:
            flags[j] = flags[j] | {coord}
    frames = [0] * nf
    for obs_idx, row in obs_rows:
        for j in np.nonzero(row)[0]:
            frames[j] |= 1 << obs_idx
    return sigmas, flags, frames


def enumerate_faults(circuit: NoisyCircuit) -> tuple[FaultSite, ...]:
    """Every elementary fault outcome of the circuit with its signature.

    Deterministic order: instruction order, then target order, then Pauli
    order (X, Y, Z for single-qubit channels; IX..ZZ for two-qubit ones).
    """
    specs = []
    meas_base = 0
    for pos, ins in enumerate(circuit.instructions):
        specs.extend(_channel_outcomes(pos, ins, meas_base))
        if ins.name == "M":
            meas_base += len(ins.targets)
    sigmas, flags, frames = _propagate(circuit, [s[4] for s in specs])
    return tuple(
        FaultSite(position=atoms[0][0], kind=kind, targets=targets,
                  pauli=pauli, prob=prob, atoms=atoms,
                  sigma=sig, flags=flg, frames=frm)
        for (kind, targets, pauli, prob, atoms), sig, flg, frm
        in zip(specs, sigmas, flags, frames))


# --- hypergraph construction ------------------------------------------------


def _xor_prob(p1: float, p2: float) -> float:
    return p1 + p2 - 2.0 * p1 * p2


def extract_hypergraph(circuit: NoisyCircuit) -> DecodingHypergraph:
    """Exhaustively enumerate faults and merge identical signatures."""
    faults = enumerate_faults(circuit)
    acc: dict[tuple, float] = {}
    for f in faults:
        if not f.sigma and not f.flags and not f.frames:
            continue  # invisible and harmless: not an error mechanism
        key = f.signature
        acc[key] = _xor_prob(acc.get(key, 0.0), f.prob)
    edges = tuple(sorted(
        (Hyperedge(sigma=s, flags=fl, prob=p, frames=fr)
         for (s, fl, fr), p in acc.items()),
        key=Hyperedge.sort_key))

    # report signatures that agree on (sigma, flags) but differ in frames:
    # such pairs are fundamentally ambiguous to any decoder.
    seen: dict[tuple, list[int]] = {}
    for e in edges:
        seen.setdefault((e.sigma, e.flags), []).append(e.frames)
    ambiguous = sorted(
        (tuple(sorted(s)), tuple(sorted(fl)), tuple(sorted(frs)))
        for (s, fl), frs in seen.items() if len(frs) > 1)

    detector_coords = circuit.meta.get("detector_coords")
    if detector_coords is None:
        detector_coords = tuple((i, 0) for i in range(circuit.num_detectors))
    flag_coords = circuit.meta.get("flag_coords")
    if flag_coords is None:
        flag_coords = tuple((i, 0) for i in range(circuit.num_flags))
    p_M = float(circuit.meta.get("p", 0.0) or 0.0)
    meta = {
        "num_fault_sites": len(faults),
        "ambiguous": ambiguous,
    }
    for key in ("code", "rounds", "basis", "p"):
        if key in circuit.meta:
            meta[key] = circuit.meta[key]
    return DecodingHypergraph(
        num_detectors=circuit.num_detectors,
        num_flags=circuit.num_flags,
        num_observables=circuit.num_observables,
        detector_coords=tuple(tuple(c) for c in detector_coords),
        flag_coords=tuple(tuple(c) for c in flag_coords),
        hyperedges=edges,
        p_M=p_M,
        meta=meta)


def build_equiv_classes(
        hyperedges) -> dict[frozenset[int], EquivalenceClass]:
    """Group hyperedges by exact detector set."""
    groups: dict[frozenset[int], list[Hyperedge]] = {}
    for e in hyperedges:
        groups.setdefault(e.sigma, []).append(e)
    classes = {}
    for sigma, members in groups.items():
        members.sort(key=lambda m: (-m.prob, tuple(sorted(m.flags)),
                                    m.frames))
        classes[sigma] = EquivalenceClass(sigma=sigma,
                                          members=tuple(members))
    return classes


def select_representative(cls: EquivalenceClass, F=frozenset(),
                          p_M: float = 0.0, det_rounds=None,
                          renorm: str = "paper"):
    """Pick the class member most consistent with the observed flags ``F``.

    ``F`` is first restricted to the rounds spanned by the class (flags
    raised elsewhere in the circuit say nothing about this class).  The
    member minimising ``|flags XOR F_eff|`` wins; ties go to the higher
    probability, then to member order.  With ``renorm="paper"`` and a
    non-empty effective flag set, the returned weight is renormalised to

        p_M ** |flags XOR F_eff| * prob ** (|sigma| - 1)

    accounting for the measurement errors needed to explain the flag
    mismatch and for the syndrome weight of the member.  With
    ``renorm="off"`` (or no effective flags) the raw probability is used.
    Returns ``(member, weight)``.
    """
    if renorm not in ("paper", "off"):
        raise ValueError(f"unknown renorm mode {renorm!r}")
    spanned = cls.spanned_rounds(det_rounds)
    F_eff = frozenset(c for c in F if c[1] in spanned)
    best = min(cls.members,
               key=lambda m: (len(m.flags ^ F_eff), -m.prob,
                              cls.members.index(m)))
    if renorm == "off" or not F_eff:
        return best, best.prob
    mismatch = len(best.flags ^ F_eff)
    weight = (p_M ** mismatch) * best.prob ** (len(best.sigma) - 1)
    return best, weight


def detector_marginals(hg: DecodingHypergraph) -> np.ndarray:
    """Exact marginal flip probability of each detector.

    A detector flips iff an odd number of the hyperedges covering it fire,
    so its marginal is ``(1 - prod(1 - 2*prob)) / 2``.
    """
    marg = np.zeros(hg.num_detectors, dtype=float)
    prod = np.ones(hg.num_detectors, dtype=float)
    for e in hg.hyperedges:
        for d in e.sigma:
            prod[d] *= 1.0 - 2.0 * e.prob
    marg = (1.0 - prod) / 2.0
    return marg


# --- serialization ----------------------------------------------------------


def hypergraph_to_json(hg: DecodingHypergraph) -> str:
    doc = {
        "format": "FPN_DEM",
        "version": 1,
        "num_detectors": hg.num_detectors,
        "num_flags": hg.num_flags,
        "num_observables": hg.num_observables,
        "detector_coords": [list(c) for c in hg.detector_coords],
        "flag_coords": [list(c) for c in hg.flag_coords],
        "p_M": hg.p_M,
        "hyperedges": [
            {
                "sigma": sorted(e.sigma),
                "flags": [list(c) for c in sorted(e.flags)],
                "prob": e.prob,
                "frames": e.frames,
            }
            for e in hg.hyperedges
        ],
        "meta": _meta_jsonable(hg.meta),
    }
    return json.dumps(doc, indent=1)


def _meta_jsonable(value):
    if isinstance(value, dict):
        return {k: _meta_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_meta_jsonable(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(_meta_jsonable(v) for v in value)
    return value


def hypergraph_from_json(text: str) -> DecodingHypergraph:
    doc = json.loads(text)
    if doc.get("format") != "FPN_DEM" or doc.get("version") != 1:
        raise ValueError("not an FPN_DEM v1 document")
    edges = tuple(
        Hyperedge(sigma=frozenset(e["sigma"]),
                  flags=frozenset(tuple(c) for c in e["flags"]),
                  prob=float(e["prob"]),
                  frames=int(e["frames"]))
        for e in doc["hyperedges"])
    return DecodingHypergraph(
        num_detectors=int(doc["num_detectors"]),
        num_flags=int(doc["num_flags"]),
        num_observables=int(doc["num_observables"]),
        detector_coords=tuple(tuple(c) for c in doc["detector_coords"]),
        flag_coords=tuple(tuple(c) for c in doc["flag_coords"]),
        hyperedges=edges,
        p_M=float(doc["p_M"]),
        meta=doc.get("meta", {}))


def save_hypergraph(hg: DecodingHypergraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(hypergraph_to_json(hg))


def load_hypergraph(path) -> DecodingHypergraph:
    with open(path, encoding="utf-8") as fh:
        return hypergraph_from_json(fh.read())
