"""Counter-based random draws shared by all sampling backends.

``uniform(seed, trial, site) = to_double(mix64(mix64(seed ^ MUL1*trial)
^ MUL2*site))`` — a stateless SplitMix64-style chain.  All arithmetic is
modulo 2**64.
"""

from __future__ import annotations

import numpy as np

MUL1 = np.uint64(0x9E3779B97F4A7C15)
MUL2 = np.uint64(0xD1B54A32D192ED03)
_INV_2_53 = float(2.0 ** -53)

# opcode values shared by the compiler and both kernels
OP_H = 0
OP_CX = 1
OP_R = 2
OP_M = 3
OP_CHAN1 = 4
OP_CHAN2 = 5

# x/z components of the 15 non-identity two-qubit Paulis, enumerated as
# IX, IY, IZ, XI, ... ZZ — first qubit outer, second inner, II skipped.
# The order matches the detector-error-model fault enumeration exactly.
_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PAIRS = [a + b for a in "IXYZ" for b in "IXYZ" if a + b != "II"]
CHAN2_XA = np.array([_PAULI_BITS[p[0]][0] for p in _PAIRS], dtype=np.uint8)
CHAN2_ZA = np.array([_PAULI_BITS[p[0]][1] for p in _PAIRS], dtype=np.uint8)
CHAN2_XB = np.array([_PAULI_BITS[p[1]][0] for p in _PAIRS], dtype=np.uint8)
CHAN2_ZB = np.array([_PAULI_BITS[p[1]][1] for p in _PAIRS], dtype=np.uint8)


def mix64(z):
    """SplitMix64 finalizer; accepts uint64 scalars or arrays."""
    z = np.uint64(z) if np.isscalar(z) else z
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def trial_keys(seed: int, trial_ids) -> np.ndarray:
    """Per-trial chain keys: mix64(seed ^ MUL1 * trial)."""
    t = np.asarray(trial_ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(seed) ^ (MUL1 * t))


def site_uniform(tkeys: np.ndarray, site: int) -> np.ndarray:
    """Uniform [0,1) doubles for one draw site across many trials."""
    with np.errstate(over="ignore"):
        r = mix64(tkeys ^ (MUL2 * np.uint64(site)))
    return (r >> np.uint64(11)).astype(np.float64) * _INV_2_53
