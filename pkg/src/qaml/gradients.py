"""Parameter-shift gradients of the triplet loss.

Ansatz angles sit in an unconditional RY acting on every branch, so each
similarity is a degree-one trigonometric polynomial in ``theta_k`` and the
usual rule ``[s(+pi/2) - s(-pi/2)] / 2`` is exact.

Anchor features are different. Each one appears in two controlled RY gates
(first and repeated encoding) that act on the anchor branch alone, and the
similarity is linear in that branch's amplitudes, so it depends on a single
gate angle ``phi`` only through ``cos(phi/2)`` and ``sin(phi/2)``. For such a
half-frequency sinusoid the ``+-pi/2`` shift pair must be scaled by
``1 / (2 sqrt 2)``. The two occurrences are shifted one at a time and their
partial derivatives summed.
"""
from __future__ import annotations

from math import pi, sqrt

import numpy as np

from .errors import PreconditionError
from .model import triplet_readout

PARAM_SHIFT = pi / 2
_PARAM_COEF = 0.5
_ANCHOR_COEF = 1.0 / (2.0 * sqrt(2.0))


def shift_eval(f, v, k, shift):
    if shift == 0:
        raise PreconditionError("shift must be non-zero")
    v = np.array(v, dtype=float)
    if not -v.size <= k < v.size:
        raise IndexError(f"index {k} out of range for vector of length {v.size}")
    v[k] += shift
    return f(v)


def finite_diff(f, v, h=1e-5):
    if h <= 0:
        raise PreconditionError("step must be positive")
    v = np.asarray(v, dtype=float)
    flat = v.ravel()
    out = np.zeros(flat.size)
    for k in range(flat.size):
        up = flat.copy()
        dn = flat.copy()
        up[k] += h
        dn[k] -= h
        out[k] = (f(up.reshape(v.shape)) - f(dn.reshape(v.shape))) / (2 * h)
    return out


def _sign(s):
    return float(np.sign(s))


def _hinge_arg(r, margin):
    return r.d_p - r.d_n + margin


def grad_params(batch, model, shots=None, rng=None):
    """Gradient of the batch triplet loss w.r.t. the flat parameter vector
    (row-major, layer then qubit)."""
    batch = list(batch)
    if not batch:
        raise PreconditionError("triplet batch is empty")
    theta = model.theta.ravel()
    grad = np.zeros(theta.size)
    for t in batch:
        base = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng)
        if _hinge_arg(base, model.margin) <= 0:
            continue
        wp, wn = -_sign(base.s_p), _sign(base.s_n)
        for k in range(theta.size):
            up = theta.copy()
            dn = theta.copy()
            up[k] += PARAM_SHIFT
            dn[k] -= PARAM_SHIFT
            rp = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng, theta=up)
            rm = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng, theta=dn)
            ds_p = _PARAM_COEF * (rp.s_p - rm.s_p)
            ds_n = _PARAM_COEF * (rp.s_n - rm.s_n)
            grad[k] += wp * ds_p + wn * ds_n
    return grad / len(batch)


def grad_anchor(triplet, model, shots=None, rng=None):
    """Gradient of one triplet's hinge term w.r.t. its anchor features."""
    t = triplet
    d = model.ansatz.num_data_qubits
    grad = np.zeros(d)
    base = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng)
    if _hinge_arg(base, model.margin) <= 0:
        return grad
    wp, wn = -_sign(base.s_p), _sign(base.s_n)
    for j in range(d):
        for occurrence in (0, 1):
            off = np.zeros(d)
            off[j] = PARAM_SHIFT
            plus = [None, None]
            minus = [None, None]
            plus[occurrence] = off
            minus[occurrence] = -off
            rp = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng,
                                 anchor_offsets=tuple(plus))
            rm = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng,
                                 anchor_offsets=tuple(minus))
            ds_p = _ANCHOR_COEF * (rp.s_p - rm.s_p)
            ds_n = _ANCHOR_COEF * (rp.s_n - rm.s_n)
            grad[j] += wp * ds_p + wn * ds_n
    return grad


def hinge_term(triplet, model, anchor=None):
    """Scalar hinge term of one triplet, optionally at a replacement anchor."""
    a = triplet.anchor if anchor is None else anchor
    r = triplet_readout(a, triplet.positive, triplet.negative, model)
    return max(0.0, _hinge_arg(r, model.margin))
