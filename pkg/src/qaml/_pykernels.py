"""Pure-numpy statevector kernels, used when the compiled extension is absent."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _pair_indices(dim, target, ctrl_mask, ctrl_val):
    idx = np.arange(dim)
    keep = ((idx >> target) & 1 == 0) & ((idx & ctrl_mask) == ctrl_val)
    lo = idx[keep]
    return lo, lo + (1 << target)


def apply_1q(amps, target, m00, m01, m10, m11, ctrl_mask=0, ctrl_val=0):
    lo, hi = _pair_indices(amps.shape[0], target, ctrl_mask, ctrl_val)
    a0 = amps[lo]
    a1 = amps[hi]
    amps[lo] = m00 * a0 + m01 * a1
    amps[hi] = m10 * a0 + m11 * a1


def apply_ry(amps, target, angle, ctrl_mask=0, ctrl_val=0):
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    apply_1q(amps, target, c, -s, s, c, ctrl_mask, ctrl_val)


@lru_cache(maxsize=1024)
def _outcome_index(dim, qubits):
    idx = np.arange(dim)
    out = np.zeros(dim, dtype=np.intp)
    for b, q in enumerate(qubits):
        out |= ((idx >> q) & 1) << b
    return out


def marginal_probs(amps, qubits):
    qubits = tuple(int(q) for q in qubits)
    weights = amps.real ** 2 + amps.imag ** 2
    return np.bincount(_outcome_index(amps.shape[0], qubits), weights=weights,
                       minlength=1 << len(qubits)).astype(np.float64)


def collapse(amps, qubit, outcome, scale):
    idx = np.arange(amps.shape[0])
    amps[((idx >> qubit) & 1) != outcome] = 0
    amps *= scale
