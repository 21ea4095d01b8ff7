"""Pure-numpy sampling kernel, vectorised over trials in fixed-size blocks."""

from __future__ import annotations

import numpy as np

from fpn._kernels.rng import (CHAN2_XA, CHAN2_XB, CHAN2_ZA, CHAN2_ZB,
                              OP_CHAN1, OP_CHAN2, OP_CX, OP_H, OP_M, OP_R,
                              site_uniform, trial_keys)

BLOCK = 1 << 13

name = "numpy"


def run(compiled, trials: int, seed: int) -> np.ndarray:
    """Sample measurement records; returns (trials, n_meas) uint8."""
    rec = np.empty((trials, compiled.n_meas), dtype=np.uint8)
    for start in range(0, trials, BLOCK):
        stop = min(start + BLOCK, trials)
        _run_block(compiled, seed, start, stop, rec[start:stop])
    return rec


def _run_block(c, seed, start, stop, rec):
    n = stop - start
    tkeys = trial_keys(seed, np.arange(start, stop, dtype=np.uint64))
    fx = np.zeros((n, c.n_qubits), dtype=np.uint8)
    fz = np.zeros((n, c.n_qubits), dtype=np.uint8)
    ops = c.ops
    for i in range(ops.shape[0]):
        code, a, b, row, site = ops[i]
        if code == OP_H:
            tmp = fx[:, a].copy()
            fx[:, a] = fz[:, a]
            fz[:, a] = tmp
        elif code == OP_CX:
            fx[:, b] ^= fx[:, a]
            fz[:, a] ^= fz[:, b]
        elif code == OP_R:
            fx[:, a] = 0
            fz[:, a] = 0
        elif code == OP_M:
            bit = fx[:, a].copy()
            if site >= 0:
                u = site_uniform(tkeys, site)
                bit ^= u < c.mflip_p[row]
            rec[:, b] = bit
        elif code == OP_CHAN1:
            u = site_uniform(tkeys, site)
            cum = c.chan1_cum[row]
            hit = u < cum[2]
            if hit.any():
                is_x = u < cum[0]
                is_y = ~is_x & (u < cum[1])
                is_z = hit & ~is_x & ~is_y
                fx[:, a] ^= is_x | is_y
                fz[:, a] ^= is_y | is_z
        else:  # OP_CHAN2
            u = site_uniform(tkeys, site)
            p = c.chan2_p[row]
            hit = u < p
            if hit.any():
                k = np.minimum((u * (15.0 / p)).astype(np.int64), 14)
                k[~hit] = 0
                fx[:, a] ^= CHAN2_XA[k] & hit
                fz[:, a] ^= CHAN2_ZA[k] & hit
                fx[:, b] ^= CHAN2_XB[k] & hit
                fz[:, b] ^= CHAN2_ZB[k] & hit
