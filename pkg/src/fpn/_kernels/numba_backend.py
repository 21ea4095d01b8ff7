"""Numba sampling kernel: JIT-compiled, parallel over trials."""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from fpn._kernels.rng import (CHAN2_XA, CHAN2_XB, CHAN2_ZA, CHAN2_ZB, MUL1,
                              MUL2, OP_CHAN1, OP_CHAN2, OP_CX, OP_H, OP_M,
                              OP_R)

name = "numba"

_U = np.uint64
_INV_2_53 = 2.0 ** -53


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


@njit(inline="always")
def _uniform(tkey, site):
    r = _mix64(tkey ^ (MUL2 * _U(site)))
    return np.float64(r >> _U(11)) * _INV_2_53


@njit(parallel=True)
def _kernel(ops, chan1_cum, chan2_p, mflip_p, c2xa, c2za, c2xb, c2zb,
            n_qubits, seed, rec):
    trials = rec.shape[0]
    for t in prange(trials):
        tkey = _mix64(_U(seed) ^ (MUL1 * _U(t)))
        fx = np.zeros(n_qubits, dtype=np.uint8)
        fz = np.zeros(n_qubits, dtype=np.uint8)
        for i in range(ops.shape[0]):
            code = ops[i, 0]
            a = ops[i, 1]
            b = ops[i, 2]
            row = ops[i, 3]
            site = ops[i, 4]
            if code == OP_H:
                tmp = fx[a]
                fx[a] = fz[a]
                fz[a] = tmp
            elif code == OP_CX:
                fx[b] ^= fx[a]
                fz[a] ^= fz[b]
            elif code == OP_R:
                fx[a] = 0
                fz[a] = 0
            elif code == OP_M:
                bit = fx[a]
                if site >= 0:
                    if _uniform(tkey, site) < mflip_p[row]:
                        bit ^= 1
                rec[t, b] = bit
            elif code == OP_CHAN1:
                u = _uniform(tkey, site)
                if u < chan1_cum[row, 2]:
                    if u < chan1_cum[row, 0]:
                        fx[a] ^= 1
                    elif u < chan1_cum[row, 1]:
                        fx[a] ^= 1
                        fz[a] ^= 1
                    else:
                        fz[a] ^= 1
            else:  # OP_CHAN2
                u = _uniform(tkey, site)
                p = chan2_p[row]
                if u < p:
                    k = int(u * (15.0 / p))
                    if k > 14:
                        k = 14
                    fx[a] ^= c2xa[k]
                    fz[a] ^= c2za[k]
                    fx[b] ^= c2xb[k]
                    fz[b] ^= c2zb[k]


def run(compiled, trials: int, seed: int) -> np.ndarray:
    """Sample measurement records; returns (trials, n_meas) uint8."""
    rec = np.empty((trials, compiled.n_meas), dtype=np.uint8)
    _kernel(compiled.ops, compiled.chan1_cum, compiled.chan2_p,
            compiled.mflip_p, CHAN2_XA, CHAN2_ZA, CHAN2_XB, CHAN2_ZB,
            compiled.n_qubits, seed, rec)
    return rec
