# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels.

Mirrors ``_pykernels`` function for function; the public simulator picks
one at import time.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def apply_1q(double complex[::1] amps, int target,
             double complex m00, double complex m01,
             double complex m10, double complex m11,
             long ctrl_mask=0, long ctrl_val=0):
    """In-place 2x2 update on amplitude pairs (i, i | 1<<target) whose
    control bits match ``ctrl_val`` under ``ctrl_mask``."""
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t block, off, i, j
    cdef double complex a0, a1
    with nogil:
        block = 0
        while block < dim:
            for off in range(tbit):
                i = block + off
                if (i & ctrl_mask) != ctrl_val:
                    continue
                j = i + tbit
                a0 = amps[i]
                a1 = amps[j]
                amps[i] = m00 * a0 + m01 * a1
                amps[j] = m10 * a0 + m11 * a1
            block += 2 * tbit


def apply_ry(double complex[::1] amps, int target, double angle,
             long ctrl_mask=0, long ctrl_val=0):
    """Real-rotation fast path; RY dominates every circuit in the model."""
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t tbit = (<Py_ssize_t>1) << target
    cdef Py_ssize_t block, off, i, j
    cdef double c = np.cos(0.5 * angle)
    cdef double s = np.sin(0.5 * angle)
    cdef double complex a0, a1
    with nogil:
        block = 0
        while block < dim:
            for off in range(tbit):
                i = block + off
                if (i & ctrl_mask) != ctrl_val:
                    continue
                j = i + tbit
                a0 = amps[i]
                a1 = amps[j]
                amps[i] = c * a0 - s * a1
                amps[j] = s * a0 + c * a1
            block += 2 * tbit


def marginal_probs(double complex[::1] amps, long[::1] qubits):
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t k = qubits.shape[0]
    cdef Py_ssize_t i, b, outcome
    cdef double complex a
    out = np.zeros((<Py_ssize_t>1) << k, dtype=np.float64)
    cdef double[::1] p = out
    with nogil:
        for i in range(dim):
            outcome = 0
            for b in range(k):
                outcome |= ((i >> qubits[b]) & 1) << b
            a = amps[i]
            p[outcome] += a.real * a.real + a.imag * a.imag
    return out


def collapse(double complex[::1] amps, int qubit, int outcome, double scale):
    """Zero amplitudes inconsistent with ``outcome`` and rescale the rest."""
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t i
    cdef long want = outcome
    with nogil:
        for i in range(dim):
            if ((i >> qubit) & 1) != want:
                amps[i] = 0
            else:
                amps[i] = amps[i] * scale
