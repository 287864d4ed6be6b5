"""Dense statevector simulator.

Qubit 0 is the least-significant bit of a basis-state index. Gates are
applied in place by the stride kernels in ``_backend``; the functional
wrappers here (``apply_gate``, ``run_circuit``) copy first so callers can
treat states as values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence, Union

import numpy as np

from ._backend import kernels
from .errors import (
    CapacityError,
    CircuitLogicError,
    PreconditionError,
    QubitIndexError,
    ShapeError,
)

MAX_QUBITS = 24
_INV_SQRT2 = 1.0 / sqrt(2.0)


# --- gates -----------------------------------------------------------------

@dataclass(frozen=True)
class RY:
    target: int
    angle: float

    def qubits(self):
        return (self.target,)

    def inverse(self):
        return RY(self.target, -self.angle)


@dataclass(frozen=True)
class RZ:
    target: int
    angle: float

    def qubits(self):
        return (self.target,)

    def inverse(self):
        return RZ(self.target, -self.angle)


@dataclass(frozen=True)
class H:
    target: int

    def qubits(self):
        return (self.target,)

    def inverse(self):
        return self


@dataclass(frozen=True)
class X:
    target: int

    def qubits(self):
        return (self.target,)

    def inverse(self):
        return self


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def qubits(self):
        return (self.control, self.target)

    def inverse(self):
        return self


@dataclass(frozen=True)
class CZ:
    a: int
    b: int

    def qubits(self):
        return (self.a, self.b)

    def inverse(self):
        return self


@dataclass(frozen=True)
class CRY:
    """RY on ``target`` applied only where every ``(qubit, bit)`` control matches."""

    controls: tuple
    target: int
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple((int(q), int(b)) for q, b in self.controls))

    def qubits(self):
        return tuple(q for q, _ in self.controls) + (self.target,)

    def inverse(self):
        return CRY(self.controls, self.target, -self.angle)


GateOp = Union[RY, RZ, H, X, CNOT, CZ, CRY]
GATE_TYPES = (RY, RZ, H, X, CNOT, CZ, CRY)


@dataclass(frozen=True)
class Measure:
    target: int
    slot: int


@dataclass(frozen=True)
class IfBit:
    slot: int
    value: int
    gate: GateOp


@dataclass
class Circuit:
    num_qubits: int
    steps: list = field(default_factory=list)
    num_classical: int = 0

    def __post_init__(self):
        self.steps = list(self.steps)
        self.validate()

    def validate(self):
        for step in self.steps:
            if isinstance(step, Measure):
                _check_qubits((step.target,), self.num_qubits)
                if not 0 <= step.slot < self.num_classical:
                    raise QubitIndexError(f"classical slot {step.slot} out of range")
            elif isinstance(step, IfBit):
                _check_gate(step.gate, self.num_qubits)
                if not 0 <= step.slot < self.num_classical:
                    raise QubitIndexError(f"classical slot {step.slot} out of range")
            else:
                _check_gate(step, self.num_qubits)

    def __iadd__(self, other):
        if isinstance(other, Circuit):
            if other.num_qubits != self.num_qubits:
                raise ShapeError("cannot concatenate circuits of different widths")
            self.num_classical = max(self.num_classical, other.num_classical)
            other = other.steps
        for step in other:
            self.steps.append(step)
        self.validate()
        return self

    def __add__(self, other):
        out = Circuit(self.num_qubits, list(self.steps), self.num_classical)
        out += other
        return out

    def __len__(self):
        return len(self.steps)

    def gates(self):
        return [s for s in self.steps if isinstance(s, GATE_TYPES)]


def _check_qubits(qubits, n):
    for q in qubits:
        if not 0 <= q < n:
            raise QubitIndexError(f"qubit {q} out of range for {n}-qubit register")
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"qubit indices must be distinct, got {qubits}")


def _check_gate(g, n):
    if not isinstance(g, GATE_TYPES):
        raise TypeError(f"not a gate: {g!r}")
    _check_qubits(g.qubits(), n)


# --- state -----------------------------------------------------------------

class StateVector:
    """``2**num_qubits`` complex amplitudes, little-endian basis ordering."""

    __slots__ = ("num_qubits", "amps")

    def __init__(self, amps, num_qubits=None):
        amps = np.ascontiguousarray(amps, dtype=np.complex128)
        if amps.ndim != 1:
            raise ShapeError("amplitudes must be a flat vector")
        n = int(amps.shape[0]).bit_length() - 1
        if amps.shape[0] != 1 << n or n < 1:
            raise ShapeError(f"length {amps.shape[0]} is not 2**n for n >= 1")
        if num_qubits is not None and num_qubits != n:
            raise ShapeError(f"expected {1 << num_qubits} amplitudes, got {amps.shape[0]}")
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
        self.num_qubits = n
        self.amps = amps

    def copy(self):
        return StateVector(self.amps.copy())

    def norm(self):
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def apply(self, g):
        """Apply ``g`` in place and return self."""
        _check_gate(g, self.num_qubits)
        _apply_unchecked(self.amps, g)
        return self

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


def _mask(controls):
    mask = val = 0
    for q, b in controls:
        mask |= 1 << q
        if b:
            val |= 1 << q
    return mask, val


def _apply_unchecked(amps, g):
    k = kernels
    if isinstance(g, RY):
        k.apply_ry(amps, g.target, float(g.angle))
    elif isinstance(g, CRY):
        mask, val = _mask(g.controls)
        k.apply_ry(amps, g.target, float(g.angle), mask, val)
    elif isinstance(g, CNOT):
        bit = 1 << g.control
        k.apply_1q(amps, g.target, 0, 1, 1, 0, bit, bit)
    elif isinstance(g, H):
        k.apply_1q(amps, g.target, _INV_SQRT2, _INV_SQRT2, _INV_SQRT2, -_INV_SQRT2)
    elif isinstance(g, X):
        k.apply_1q(amps, g.target, 0, 1, 1, 0)
    elif isinstance(g, CZ):
        bit = 1 << g.a
        k.apply_1q(amps, g.b, 1, 0, 0, -1, bit, bit)
    elif isinstance(g, RZ):
        ph = np.exp(0.5j * g.angle)
        k.apply_1q(amps, g.target, ph.conjugate(), 0, 0, ph)
    else:
        raise TypeError(f"not a gate: {g!r}")


def zero_state(n):
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps)


def apply_gate(state, g):
    return state.copy().apply(g)


def run_circuit(state, circuit, rng=None):
    """Run ``circuit`` on a copy of ``state``.

    Returns the final state and the list of classical bits (``None`` for
    slots never written). ``rng`` only needs a ``random()`` method and is
    consulted once per ``Measure``.
    """
    if circuit.num_qubits != state.num_qubits:
        raise ShapeError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {state.num_qubits}")
    out = state.copy()
    amps = out.amps
    bits = [None] * circuit.num_classical
    for step in circuit.steps:
        if isinstance(step, Measure):
            if rng is None:
                raise PreconditionError("circuit measures mid-way but no rng was given")
            bits[step.slot] = _measure_in_place(amps, step.target, rng)
        elif isinstance(step, IfBit):
            bit = bits[step.slot]
            if bit is None:
                raise CircuitLogicError(f"slot {step.slot} read before it was written")
            if bit == step.value:
                _apply_unchecked(amps, step.gate)
        else:
            _apply_unchecked(amps, step)
    return out, bits


def _measure_in_place(amps, qubit, rng):
    p1 = float(kernels.marginal_probs(amps, np.array([qubit], dtype=np.int_))[1])
    p1 = min(max(p1, 0.0), 1.0)
    outcome = 1 if rng.random() < p1 else 0
    p = p1 if outcome else 1.0 - p1
    kernels.collapse(amps, qubit, outcome, 1.0 / sqrt(p))
    return outcome


def probabilities(state, qubits):
    """Joint distribution of ``qubits``; ``qubits[0]`` is the low bit of the outcome."""
    qubits = tuple(int(q) for q in qubits)
    _check_qubits(qubits, state.num_qubits)
    return kernels.marginal_probs(state.amps, np.array(qubits, dtype=np.int_))


def inner_product(s1, s2):
    """<s1|s2>."""
    if s1.num_qubits != s2.num_qubits:
        raise ShapeError(f"states have {s1.num_qubits} and {s2.num_qubits} qubits")
    return complex(np.vdot(s1.amps, s2.amps))


def sample_shots(state, qubits, shots, rng):
    """Multinomial sample of measurement outcomes; returns ``{outcome: count}``
    with zero-count outcomes omitted."""
    if shots < 1:
        raise PreconditionError(f"shots must be >= 1, got {shots}")
    probs = probabilities(state, qubits)
    probs = np.clip(probs, 0.0, None)
    counts = rng.multinomial(int(shots), probs / probs.sum())
    return {j: int(c) for j, c in enumerate(counts) if c}


def counts_to_array(counts, num_outcomes):
    arr = np.zeros(num_outcomes, dtype=np.int64)
    for j, c in counts.items():
        arr[j] = c
    return arr


def statevector(amps: Sequence[complex]) -> StateVector:
    """Wrap and normalise raw amplitudes."""
    amps = np.asarray(amps, dtype=np.complex128)
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise PreconditionError("cannot normalise the zero vector")
    return StateVector(amps / norm)
