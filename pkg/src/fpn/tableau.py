"""Stabilizer-tableau simulation for noiseless circuit verification.

Standard CHP-style tableau: rows 0..n-1 hold destabilizers, rows n..2n-1
stabilizers, plus one scratch row for deterministic-measurement phase
accumulation.  Used to certify that every DETECTOR and FLAG_BIT of a
noiseless memory circuit is deterministically zero and every OBSERVABLE is
deterministic — the property the Pauli-frame sampler relies on.
"""
from __future__ import annotations

import numpy as np


class StabilizerSim:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros(2 * n + 1, dtype=np.uint8)
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1

    def h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cx(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def pauli(self, kind: str, q: int) -> None:
        if kind == "X":
            self.r ^= self.z[:, q]
        elif kind == "Z":
            self.r ^= self.x[:, q]
        elif kind == "Y":
            self.r ^= self.x[:, q] ^ self.z[:, q]
        else:
            raise ValueError(f"unknown Pauli {kind!r}")

    def _rowsum(self, h: int, i: int) -> None:
        x1 = self.x[i].astype(np.int64)
        z1 = self.z[i].astype(np.int64)
        x2 = self.x[h].astype(np.int64)
        z2 = self.z[h].astype(np.int64)
        g = (x1 * z1 * (z2 - x2)
             + x1 * (1 - z1) * z2 * (2 * x2 - 1)
             + (1 - x1) * z1 * x2 * (1 - 2 * z2))
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(g.sum())
        self.r[h] = (total % 4) // 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, q: int, rng: np.random.Generator | None = None
                ) -> tuple[int, bool]:
        """Measure Z_q; returns (outcome, deterministic)."""
        n = self.n
        stab_rows = np.nonzero(self.x[n:2 * n, q])[0]
        if stab_rows.size:
            p = n + int(stab_rows[0])
            for i in range(2 * n):
                if i != p and self.x[i, q]:
                    self._rowsum(i, p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            bit = int(rng.integers(2)) if rng is not None else 0
            self.r[p] = bit
            return bit, False
        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in range(n):
            if self.x[i, q]:
                self._rowsum(scratch, i + n)
        return int(self.r[scratch]), True

    def reset(self, q: int, rng: np.random.Generator | None = None) -> None:
        bit, _ = self.measure(q, rng)
        if bit:
            self.pauli("X", q)


def run_circuit(circuit, seed: int = 0, pauli_faults=()) -> dict:
    """Run a circuit on the tableau, ignoring noise channels.

    ``pauli_faults`` maps instruction positions to extra Paulis injected
    *after* that instruction, as (position, kind, qubit) triples — used to
    cross-check fault propagation.  Kind ``"flip"`` flips the classical
    record bit ``q`` instead of applying a Pauli.  Returns the measurement
    record plus decoded DETECTOR / OBSERVABLE / FLAG_BIT values.
    """
    sim = StabilizerSim(circuit.n_qubits)
    rng = np.random.default_rng(seed)
    faults: dict[int, list[tuple[str, int]]] = {}
    for pos, kind, q in pauli_faults:
        faults.setdefault(pos, []).append((kind, q))
    record: list[int] = []
    deterministic: list[bool] = []
    detectors: list[int] = []
    observables: list[int] = []
    flag_bits: list[int] = []
    for pos, ins in enumerate(circuit.instructions):
        if ins.name == "H":
            for q in ins.targets:
                sim.h(q)
        elif ins.name == "CNOT":
            for a, b in zip(ins.targets[::2], ins.targets[1::2]):
                sim.cx(a, b)
        elif ins.name == "R":
            for q in ins.targets:
                sim.reset(q, rng)
        elif ins.name == "M":
            for q in ins.targets:
                bit, det = sim.measure(q, rng)
                record.append(bit)
                deterministic.append(det)
        elif ins.name == "PAULI_CHANNEL":
            pass
        elif ins.name == "DETECTOR":
            bit = 0
            for m in ins.targets:
                bit ^= record[m]
            detectors.append(bit)
        elif ins.name == "OBSERVABLE":
            bit = 0
            for m in ins.targets:
                bit ^= record[m]
            observables.append(bit)
        elif ins.name == "FLAG_BIT":
            flag_bits.append(record[ins.targets[0]])
        else:
            raise ValueError(f"unknown instruction {ins.name!r}")
        for kind, q in faults.get(pos, ()):
            if kind == "flip":
                record[q] ^= 1
            else:
                sim.pauli(kind, q)
    return {
        "record": record,
        "deterministic": deterministic,
        "detectors": detectors,
        "observables": observables,
        "flag_bits": flag_bits,
    }


def verify_noiseless(circuit, seeds=(0, 1, 2)) -> list[str]:
    """Report — empty iff all detectors/flags are deterministically zero and
    all observables deterministic across random measurement branches."""
    report: list[str] = []
    runs = [run_circuit(circuit, seed=s) for s in seeds]
    for s, out in zip(seeds, runs):
        bad = [i for i, b in enumerate(out["detectors"]) if b]
        if bad:
            report.append(f"seed {s}: nonzero detectors {bad[:8]}")
        bad = [i for i, b in enumerate(out["flag_bits"]) if b]
        if bad:
            report.append(f"seed {s}: nonzero flag bits {bad[:8]}")
    obs = [tuple(out["observables"]) for out in runs]
    if len(set(obs)) > 1:
        report.append(f"observables vary across seeds: {obs}")
    return report
