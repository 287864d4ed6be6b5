"""Circuit builders for angle encoding and the triplet superposition.

Every feature becomes the angle of one RY rotation on its own data qubit.
Two ancillas select the branch of a triplet: ``reg1 = 0`` carries the
anchor (on both ``reg2`` values), ``reg1 = 1`` carries the positive
(``reg2 = 0``) or the negative (``reg2 = 1``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QubitIndexError, ShapeError
from .sim import CRY, RY, Circuit, H, IfBit, Measure, X


@dataclass(frozen=True)
class RegisterLayout:
    reg1: int
    reg2: int
    data: tuple

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(int(q) for q in self.data))
        every = (self.reg1, self.reg2) + self.data
        if not self.data:
            raise ShapeError("layout needs at least one data qubit")
        if min(every) < 0 or len(set(every)) != len(every):
            raise QubitIndexError(f"layout qubits must be distinct and non-negative: {every}")

    @classmethod
    def default(cls, d):
        """Data on qubits ``0..d-1``, then ``reg1 = d`` and ``reg2 = d + 1``."""
        return cls(reg1=d, reg2=d + 1, data=tuple(range(d)))

    @property
    def num_data(self):
        return len(self.data)

    @property
    def num_qubits(self):
        return max((self.reg1, self.reg2) + self.data) + 1


def _angles(x, layout):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != layout.num_data:
        raise ShapeError(f"feature vector has {x.shape[0]} entries, layout has "
                         f"{layout.num_data} data qubits")
    if not np.all(np.isfinite(x)):
        raise ShapeError("feature vector contains non-finite values")
    return x


def feature_map(x, layout):
    x = _angles(x, layout)
    return Circuit(layout.num_qubits, [RY(q, float(v)) for q, v in zip(layout.data, x)])


def controlled_feature_map(x, controls, layout):
    """``feature_map(x)`` acting only on branches where all ``controls`` match."""
    x = _angles(x, layout)
    controls = tuple((int(q), int(b)) for q, b in controls)
    if not controls:
        return feature_map(x, layout)
    if {q for q, _ in controls} & set(layout.data):
        raise QubitIndexError("control qubits overlap the data register")
    return Circuit(layout.num_qubits,
                   [CRY(controls, q, float(v)) for q, v in zip(layout.data, x)])


def branch_controls(layout):
    """Controls selecting the anchor, positive and negative branches."""
    r1, r2 = layout.reg1, layout.reg2
    return ((r1, 0),), ((r1, 1), (r2, 0)), ((r1, 1), (r2, 1))


def encode_triplet(a, p, n, layout):
    """The three controlled encodings, without the ancilla Hadamards."""
    ca, cp, cn = branch_controls(layout)
    circ = controlled_feature_map(a, ca, layout)
    circ += controlled_feature_map(p, cp, layout)
    circ += controlled_feature_map(n, cn, layout)
    return circ


def prepare_triplet_superposition(a, p, n, layout):
    a, p, n = (_angles(v, layout) for v in (a, p, n))
    circ = Circuit(layout.num_qubits, [H(layout.reg1), H(layout.reg2)])
    circ += encode_triplet(a, p, n, layout)
    return circ


def dimension_reduction(layout, pairs, correction=X, num_qubits=None):
    """Measure one qubit of each ``(measured, partner)`` pair and apply
    ``correction(partner)`` when the outcome is 1.

    Slot ``i`` holds the outcome of ``pairs[i]``. Use
    :func:`reduced_data_qubits` for the surviving data register.
    """
    pairs = [(int(m), int(t)) for m, t in pairs]
    flat = [q for pair in pairs for q in pair]
    if len(set(flat)) != len(flat):
        raise QubitIndexError("a qubit appears in more than one reduction pair")
    if not set(flat) <= set(layout.data):
        raise QubitIndexError("reduction pairs must use data qubits only")
    width = layout.num_qubits if num_qubits is None else num_qubits
    steps = []
    for slot, (m, t) in enumerate(pairs):
        steps.append(Measure(m, slot))
        steps.append(IfBit(slot, 1, correction(t)))
    return Circuit(width, steps, num_classical=len(pairs))


def reduced_data_qubits(layout, pairs):
    measured = {int(m) for m, _ in pairs}
    return tuple(q for q in layout.data if q not in measured)
