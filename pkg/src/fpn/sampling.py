"""Monte Carlo sampling of noisy memory circuits.

``sample`` compiles a circuit once into flat arrays, hands them to a kernel
backend (numpy or numba; see :mod:`fpn._kernels`), and converts the raw
measurement records into detector, flag, and observable bits.  Randomness is
counter-based — a pure function of ``(seed, trial, draw site)`` — so output
is bit-identical across backends, thread counts, and batch splits.

``estimate_ber`` decodes each sampled shot and reports the logical block
error rate with a Wilson-score standard error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from fpn._kernels import get_backend
from fpn._kernels.rng import OP_CHAN1, OP_CHAN2, OP_CX, OP_H, OP_M, OP_R
from fpn.circuits import NoisyCircuit

__all__ = [
    "CompiledCircuit",
    "SyndromeBatch",
    "BerResult",
    "compile_circuit",
    "sample",
    "estimate_ber",
    "wilson_stderr",
    "save_batch",
    "load_batch",
]


@dataclass
class CompiledCircuit:
    """Flat-array form of a noisy circuit, executable by any kernel."""

    n_qubits: int
    n_meas: int
    n_sites: int                 # number of random-draw sites
    ops: np.ndarray              # (n_ops, 5) int64: code, a, b, row, site
    chan1_cum: np.ndarray        # (n1, 3) cumulative X, X+Y, X+Y+Z probs
    chan2_p: np.ndarray          # (n2,) total two-qubit error probs
    mflip_p: np.ndarray          # (nm,) measurement flip probs
    det_indptr: np.ndarray
    det_indices: np.ndarray
    flag_meas: np.ndarray        # record index of each flag bit
    obs_indptr: np.ndarray
    obs_indices: np.ndarray
    detector_coords: tuple
    flag_coords: tuple
    num_observables: int
    meta: dict = field(default_factory=dict)


def compile_circuit(circuit: NoisyCircuit) -> CompiledCircuit:
    ops: list[tuple[int, int, int, int, int]] = []
    chan1_rows: dict[tuple, int] = {}
    chan2_rows: dict[float, int] = {}
    mflip_rows: dict[float, int] = {}
    det_lists: list[tuple[int, ...]] = []
    obs_map: dict[int, tuple[int, ...]] = {}
    flag_meas: dict[int, int] = {}
    site = 0
    meas = 0
    for ins in circuit.instructions:
        name = ins.name
        if name == "H":
            ops.extend((OP_H, q, -1, -1, -1) for q in ins.targets)
        elif name == "CNOT":
            ops.extend((OP_CX, a, b, -1, -1)
                       for a, b in zip(ins.targets[::2], ins.targets[1::2]))
        elif name == "R":
            ops.extend((OP_R, q, -1, -1, -1) for q in ins.targets)
        elif name == "M":
            if ins.args and ins.args[0] > 0.0:
                row = mflip_rows.setdefault(float(ins.args[0]),
                                            len(mflip_rows))
                for q in ins.targets:
                    ops.append((OP_M, q, meas, row, site))
                    site += 1
                    meas += 1
            else:
                for q in ins.targets:
                    ops.append((OP_M, q, meas, -1, -1))
                    meas += 1
        elif name == "PAULI_CHANNEL":
            if len(ins.args) == 3:
                px, py, pz = (float(a) for a in ins.args)
                if px + py + pz <= 0.0:
                    continue
                cum = (px, px + py, px + py + pz)
                row = chan1_rows.setdefault(cum, len(chan1_rows))
                for q in ins.targets:
                    ops.append((OP_CHAN1, q, -1, row, site))
                    site += 1
            elif len(ins.args) == 1 and len(ins.targets) == 2:
                p = float(ins.args[0])
                if p <= 0.0:
                    continue
                row = chan2_rows.setdefault(p, len(chan2_rows))
                a, b = ins.targets
                ops.append((OP_CHAN2, a, b, row, site))
                site += 1
            else:
                raise ValueError(
                    f"unsupported PAULI_CHANNEL shape: {len(ins.args)} "
                    f"args, {len(ins.targets)} targets")
        elif name == "DETECTOR":
            det_lists.append(tuple(ins.targets))
        elif name == "OBSERVABLE":
            idx = int(ins.args[0]) if ins.args else len(obs_map)
            obs_map[idx] = tuple(ins.targets)
        elif name == "FLAG_BIT":
            idx = int(ins.args[0]) if ins.args else len(flag_meas)
            flag_meas[idx] = ins.targets[0]
        else:
            raise ValueError(f"unsupported instruction {name!r}")

    def csr(lists):
        indptr = np.zeros(len(lists) + 1, dtype=np.int64)
        for i, lst in enumerate(lists):
            indptr[i + 1] = indptr[i] + len(lst)
        flat = [m for lst in lists for m in lst]
        return indptr, np.array(flat, dtype=np.int64)

    det_indptr, det_indices = csr(det_lists)
    n_obs = (max(obs_map) + 1) if obs_map else 0
    obs_lists = [obs_map.get(i, ()) for i in range(n_obs)]
    obs_indptr, obs_indices = csr(obs_lists)
    n_flags = (max(flag_meas) + 1) if flag_meas else 0
    flag_arr = np.array([flag_meas[i] for i in range(n_flags)]
                        if n_flags else [], dtype=np.int64)

    detector_coords = circuit.meta.get("detector_coords")
    if detector_coords is None:
        detector_coords = tuple((i, 0) for i in range(len(det_lists)))
    flag_coords = circuit.meta.get("flag_coords")
    if flag_coords is None:
        flag_coords = tuple((i, 0) for i in range(n_flags))

    def table(rows: dict, width: int) -> np.ndarray:
        out = np.zeros((len(rows), width) if width > 1 else len(rows),
                       dtype=np.float64)
        for value, row in rows.items():
            out[row] = value
        return out

    return CompiledCircuit(
        n_qubits=circuit.n_qubits,
        n_meas=meas,
        n_sites=site,
        ops=np.array(ops, dtype=np.int64).reshape(-1, 5),
        chan1_cum=table(chan1_rows, 3).reshape(-1, 3),
        chan2_p=table(chan2_rows, 1).reshape(-1),
        mflip_p=table(mflip_rows, 1).reshape(-1),
        det_indptr=det_indptr,
        det_indices=det_indices,
        flag_meas=flag_arr,
        obs_indptr=obs_indptr,
        obs_indices=obs_indices,
        detector_coords=tuple(tuple(c) for c in detector_coords),
        flag_coords=tuple(tuple(c) for c in flag_coords),
        num_observables=n_obs,
        meta=dict(circuit.meta))


@dataclass
class SyndromeBatch:
    """Sampled detector / flag / observable bits, one row per trial."""

    detectors: np.ndarray    # (trials, num_detectors) uint8
    flags: np.ndarray        # (trials, num_flags) uint8
    observables: np.ndarray  # (trials, num_observables) uint8
    detector_coords: tuple
    flag_coords: tuple
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return self.detectors.shape[0]


def _xor_segments(rec: np.ndarray, indptr: np.ndarray,
                  indices: np.ndarray) -> np.ndarray:
    n_rows = len(indptr) - 1
    if n_rows == 0 or indptr[-1] == 0:
        return np.zeros((rec.shape[0], n_rows), dtype=np.uint8)
    gathered = rec[:, indices].astype(np.int64)
    sums = np.add.reduceat(gathered, indptr[:-1], axis=1)
    return (sums & 1).astype(np.uint8)


def sample(circuit: NoisyCircuit | CompiledCircuit, trials: int,
           seed: int = 0, backend: str | None = None) -> SyndromeBatch:
    """Sample ``trials`` shots of the circuit."""
    if trials < 0:
        raise ValueError("trials must be >= 0")
    if seed < 0:
        raise ValueError("seed must be >= 0")
    compiled = (circuit if isinstance(circuit, CompiledCircuit)
                else compile_circuit(circuit))
    mod = get_backend(backend)
    rec = mod.run(compiled, trials, seed)
    detectors = _xor_segments(rec, compiled.det_indptr, compiled.det_indices)
    observables = _xor_segments(rec, compiled.obs_indptr,
                                compiled.obs_indices)
    flags = (rec[:, compiled.flag_meas] if len(compiled.flag_meas)
             else np.zeros((trials, 0), dtype=np.uint8))
    meta = {"backend": mod.name, "p": compiled.meta.get("p", 0.0)}
    for key in ("code", "rounds", "basis"):
        if key in compiled.meta:
            meta[key] = compiled.meta[key]
    return SyndromeBatch(detectors=detectors, flags=np.ascontiguousarray(flags),
                         observables=observables,
                         detector_coords=compiled.detector_coords,
                         flag_coords=compiled.flag_coords,
                         seed=seed, meta=meta)


# --- logical error rate ------------------------------------------------------


@dataclass(frozen=True)
class BerResult:
    """Block error rate estimate from decoded Monte Carlo shots."""

    trials: int
    failures: int
    k: int
    ber: float
    ber_norm: float
    stderr: float
    meta: dict = field(default_factory=dict)


def wilson_stderr(failures: int, trials: int, z: float = 1.0) -> float:
    """Half-width of the Wilson score interval at ``z`` standard errors.

    Well-behaved at 0 or ``trials`` failures, unlike the Wald formula.
    """
    if trials <= 0:
        return float("nan")
    phat = failures / trials
    denom = 1.0 + z * z / trials
    half = (z / denom) * math.sqrt(
        phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
    return half


def estimate_ber(batch: SyndromeBatch, decoder, k: int | None = None,
                 memoize: bool = True) -> BerResult:
    """Decode every shot and estimate the logical block error rate.

    ``decoder(detectors_row, flags_row) -> int`` predicts the observable
    frame bitmask for one shot.  A shot fails when the prediction differs
    from the sampled observables in any bit.  ``ber_norm`` divides by ``k``
    (defaults to the number of observables).
    """
    trials = batch.trials
    n_obs = batch.observables.shape[1]
    if k is None:
        k = max(n_obs, 1)
    weights = (1 << np.arange(n_obs, dtype=np.int64) if n_obs
               else np.zeros(0, dtype=np.int64))
    actual = batch.observables.astype(np.int64) @ weights
    failures = 0
    cache: dict[bytes, int] = {}
    calls = 0
    for t in range(trials):
        det = batch.detectors[t]
        flg = batch.flags[t]
        if memoize:
            key = det.tobytes() + b"|" + flg.tobytes()
            pred = cache.get(key)
            if pred is None:
                pred = int(decoder(det, flg))
                cache[key] = pred
                calls += 1
        else:
            pred = int(decoder(det, flg))
            calls += 1
        if pred != actual[t]:
            failures += 1
    ber = failures / trials if trials else 0.0
    return BerResult(trials=trials, failures=failures, k=k, ber=ber,
                     ber_norm=ber / k, stderr=wilson_stderr(failures, trials),
                     meta={"decoder_calls": calls,
                           "unique_syndromes": len(cache) if memoize
                           else None})


# --- packed on-disk format ----------------------------------------------------


def save_batch(batch: SyndromeBatch, path) -> None:
    """Write a batch as a JSON header line plus little-endian packed bits."""
    header = {
        "format": "FPN_SYNDROMES",
        "version": 1,
        "trials": batch.trials,
        "num_detectors": batch.detectors.shape[1],
        "num_flags": batch.flags.shape[1],
        "num_observables": batch.observables.shape[1],
        "detector_coords": [list(c) for c in batch.detector_coords],
        "flag_coords": [list(c) for c in batch.flag_coords],
        "seed": batch.seed,
        "bit_order": "little",
        "meta": {key: batch.meta[key] for key in sorted(batch.meta)
                 if isinstance(batch.meta[key], (str, int, float, bool,
                                                 type(None)))},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for arr in (batch.detectors, batch.flags, batch.observables):
            if arr.shape[1]:
                fh.write(np.packbits(arr, axis=1,
                                     bitorder="little").tobytes())


def load_batch(path) -> SyndromeBatch:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if (header.get("format") != "FPN_SYNDROMES"
                or header.get("version") != 1):
            raise ValueError("not an FPN_SYNDROMES v1 file")
        trials = header["trials"]

        def read_bits(n_cols: int) -> np.ndarray:
            if n_cols == 0:
                return np.zeros((trials, 0), dtype=np.uint8)
            n_bytes = (n_cols + 7) // 8
            raw = fh.read(trials * n_bytes)
            if len(raw) != trials * n_bytes:
                raise ValueError("truncated syndrome file")
            packed = np.frombuffer(raw, dtype=np.uint8).reshape(trials,
                                                                n_bytes)
            return np.unpackbits(packed, axis=1,
                                 bitorder="little")[:, :n_cols]

        detectors = read_bits(header["num_detectors"])
        flags = read_bits(header["num_flags"])
        observables = read_bits(header["num_observables"])
    return SyndromeBatch(
        detectors=detectors, flags=flags, observables=observables,
        detector_coords=tuple(tuple(c) for c in header["detector_coords"]),
        flag_coords=tuple(tuple(c) for c in header["flag_coords"]),
        seed=header["seed"], meta=header.get("meta", {}))
